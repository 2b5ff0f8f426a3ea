#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "divscale/backend.hpp"
#include "divscale/decomposition.hpp"
#include "divscale/engine.hpp"
#include "divscale/perturbation.hpp"
#include "divscale/theory.hpp"

namespace py = pybind11;
using namespace divscale;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// 1-D arrays become a single channel; 2-D arrays are (time, channel).
Matrix to_matrix(const Array& a) {
    if (a.ndim() == 1) return Matrix(static_cast<std::size_t>(a.shape(0)), 1, std::vector<double>(a.data(), a.data() + a.size()));
    if (a.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array");
    return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.flat().begin(), m.flat().end(), out.mutable_data());
    return out;
}

Array to_array(const std::vector<double>& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// (N, H) or (N, H, D) array of candidates.
CandidatePool to_pool(const Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw DimensionError("candidates must be shaped (N, H) or (N, H, D)");
    const auto n = static_cast<std::size_t>(a.shape(0));
    const auto h = static_cast<std::size_t>(a.shape(1));
    const std::size_t d = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1;
    CandidatePool pool;
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = a.data() + i * h * d;
        pool.add(Forecast(Matrix(h, d, std::vector<double>(p, p + h * d))), {});
    }
    return pool;
}

Array pool_to_array(const CandidatePool& pool) {
    Array out({pool.size(), pool.horizon(), pool.channels()});
    double* dst = out.mutable_data();
    for (const auto& f : pool.candidates()) dst = std::copy(f.values.flat().begin(), f.values.flat().end(), dst);
    return out;
}

TheoryParams params(double rho, double loss_good, double loss_bad, double loss_0) {
    return {.rho = rho, .loss_good = loss_good, .loss_bad = loss_bad, .loss_0 = loss_0};
}

}  // namespace

PYBIND11_MODULE(_divscale, m) {
    m.doc() = "Diversified inference-time scaling for time-series forecasting";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<InsufficientLength>(m, "InsufficientLength", invalid.ptr());
    py::register_exception<AssumptionError>(m, "AssumptionError", invalid.ptr());
    py::register_exception<UndefinedSimilarity>(m, "UndefinedSimilarity", error.ptr());
    py::register_exception<CapabilityError>(m, "CapabilityError", error.ptr());
    py::register_exception<BackendError>(m, "BackendError", error.ptr());
    py::register_exception<DatasetError>(m, "DatasetError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

    m.def("mse", [](const Array& pred, const Array& truth) {
        return mse(Forecast(to_matrix(pred)), Forecast(to_matrix(truth)));
    });
    m.def("mae", [](const Array& pred, const Array& truth) {
        return mae(Forecast(to_matrix(pred)), Forecast(to_matrix(truth)));
    });
    m.def("cosine_similarity", [](const Array& a, const Array& b) {
        return cosine_similarity(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                                 std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
    });
    m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view, std::uint64_t>(&derive_seed),
          py::arg("base"), py::arg("label"), py::arg("index"));

    m.def(
        "stl_decompose",
        [](const Array& x, std::size_t period) {
            const auto d = stl_decompose(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), period);
            return py::make_tuple(to_array(d.trend), to_array(d.seasonal), to_array(d.residual));
        },
        py::arg("x"), py::arg("period"), "Returns (trend, seasonal, residual).");

    m.def(
        "perturb",
        [](const Array& x, const std::string& kind, std::uint64_t seed, std::optional<double> intensity) {
            auto spec = PerturbationSpec::defaults(parse_perturbation_kind(kind));
            if (intensity) spec = with_intensity(spec, *intensity);
            const SeasonalArBackend reconstructor;
            const auto pi = perturb(TimeSeries(to_matrix(x), "py", "H"), spec, seed, &reconstructor);
            return py::make_tuple(to_array(pi.series.values), pi.source_similarity);
        },
        py::arg("x"), py::arg("kind"), py::arg("seed") = 0, py::arg("intensity") = py::none(),
        "Returns (perturbed (L', D) array, similarity to the input).");

    m.def(
        "exact_match",
        [](const Array& candidates, const Array& truth, std::vector<std::size_t> budgets) {
            py::dict out;
            for (const auto& [n, em] : exact_match(to_pool(candidates), Forecast(to_matrix(truth)), std::move(budgets)))
                out[py::int_(n)] = py::make_tuple(em.loss, em.index);
            return out;
        },
        py::arg("candidates"), py::arg("truth"), py::arg("budgets"), "budget -> (loss, index)");
    m.def(
        "majority_vote",
        [](const Array& candidates, std::vector<std::size_t> budgets) {
            py::dict out;
            for (const auto& [n, f] : majority_vote(to_pool(candidates), std::move(budgets)))
                out[py::int_(n)] = to_array(f.values);
            return out;
        },
        py::arg("candidates"), py::arg("budgets"));

    m.def(
        "sample_seasonal_ar",
        [](const Array& context, std::size_t horizon, std::size_t n, double temperature, std::uint64_t seed,
           std::optional<std::string> perturbation) {
            const SeasonalArBackend backend;
            SamplingPlan plan;
            plan.backend = &backend;
            plan.n_max = n;
            plan.horizon = horizon;
            plan.decode.temperature = temperature;
            plan.seeds = SeedTree(seed);
            if (perturbation) {
                plan.mode = SamplingMode::Diversified;
                plan.perturbation = PerturbationSpec::defaults(parse_perturbation_kind(*perturbation));
            }
            return pool_to_array(generate_pool(plan, TimeSeries(to_matrix(context), "py", "H")));
        },
        py::arg("context"), py::arg("horizon"), py::arg("n"), py::arg("temperature") = 0.7, py::arg("seed") = 0,
        py::arg("perturbation") = py::none(), "Candidate pool (N, H, D) from the built-in seasonal AR forecaster.");

    m.def(
        "critical_threshold",
        [](double rho, double lg, double lb, double l0) { return critical_threshold(params(rho, lg, lb, l0)); },
        py::arg("rho"), py::arg("loss_good"), py::arg("loss_bad"), py::arg("loss_0"));
    m.def(
        "expected_min_em",
        [](double rho, double lg, double lb, std::size_t n) { return expected_min_em(params(rho, lg, lb, lb), n); },
        py::arg("rho"), py::arg("loss_good"), py::arg("loss_bad"), py::arg("n"));
    m.def(
        "mc_expected_min",
        [](double rho, double lg, double lb, std::size_t n, std::size_t trials, std::uint64_t seed) {
            const auto est = mc_expected_min(params(rho, lg, lb, lb), n, trials, seed);
            return py::make_tuple(est.mean, est.std_err);
        },
        py::arg("rho"), py::arg("loss_good"), py::arg("loss_bad"), py::arg("n"), py::arg("trials") = 100000,
        py::arg("seed") = 0, "Returns (mean, std_err).");
    m.def(
        "empirical_crossover",
        [](double rho, double lg, double lb, double l0, std::size_t trials, std::uint64_t seed) {
            return empirical_crossover(params(rho, lg, lb, l0), trials, seed);
        },
        py::arg("rho"), py::arg("loss_good"), py::arg("loss_bad"), py::arg("loss_0"), py::arg("trials") = 100000,
        py::arg("seed") = 0);
}
