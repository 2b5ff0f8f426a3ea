#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "divscale/config.hpp"
#include "divscale/perturbation.hpp"

namespace divscale {

// 0 success, 1 config, 2 backend/protocol, 3 dataset. Anything else maps to 1.
int exit_code_for(const std::exception& e) noexcept;

// 0.0, 0.1, ..., 1.2
std::vector<double> temperature_grid();
// 32, 64, ..., 1024
std::vector<std::size_t> context_length_grid();
// Intensities handed to with_intensity() by the similarity command.
std::vector<double> default_intensity_grid(PerturbationKind kind);

/// Sweeps one axis (temperature or context length) against the budgets.
/// Writes records.csv, summary.json and plotdata/scale_<axis>_<agg>.csv.
void cmd_scale_sweep(const RunConfig& cfg);

/// Every configured perturbation plus the unperturbed baseline. Writes
/// records.csv, summary.json, failures.csv, valid_perturbations.txt and
/// plotdata/perturb_<agg>.csv.
void cmd_perturb_sweep(const RunConfig& cfg);

/// RobustMSE for both strategy classes plus a standard-sampling reference.
/// Writes robustmse.csv and robustmse.json.
void cmd_robustmse(const RunConfig& cfg);

/// Analytic vs Monte Carlo expected minimum and crossover budgets.
/// Writes theory.csv and crossover.csv.
void cmd_theory(const RunConfig& cfg);

/// Mean input similarity and MV loss per intensity. Writes similarity.csv.
void cmd_similarity(const RunConfig& cfg);

struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ConformanceReport {
    std::vector<ConformanceCheck> checks;

    bool conformant() const;
    std::string to_text() const;
};

/// Runs a fixed sequence of exchanges against a backend command: handshake,
/// forecast shapes, reconstruct (or its capability error), malformed and
/// invalid requests, shutdown. Every line exchanged is appended to
/// `transcript` when given; the sequence is fixed so the transcript of a
/// deterministic backend is reproducible byte for byte.
ConformanceReport run_conformance(const std::vector<std::string>& command, std::ostream* transcript = nullptr);

/// Runs run_conformance on cfg.backend (which must be external:CMD) and
/// prints the report to `report`. Returns the process exit code.
int cmd_validate_backend(const RunConfig& cfg, std::ostream& report);

}  // namespace divscale
