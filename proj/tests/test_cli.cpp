#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "divscale/commands.hpp"

using namespace divscale;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("divscale_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Runs the CLI with stdout/stderr captured to a log; returns the exit status.
    int run(const std::string& args) const {
        const std::string cmd = std::string(DIVSCALE_CLI_PATH) + " " + args + " >" + (dir_ / "log.txt").string() + " 2>&1";
        const int raw = std::system(cmd.c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    }

    std::string read(const fs::path& p) const {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    static std::size_t lines(const std::string& s) {
        std::size_t n = 0;
        for (char c : s) n += c == '\n';
        return n;
    }

    fs::path dir_;
};

const std::string kSmall =
    "--dataset synthetic:400 --context-length 64 --horizon 8 --stride 64 --budgets 1,2";

}  // namespace

TEST_F(CliTest, ScaleSweepRecordLayout) {
    ASSERT_EQ(run("scale-sweep " + kSmall + " --values 0.5 --out " + (dir_ / "a").string()), 0) << read(dir_ / "log.txt");
    const std::string records = read(dir_ / "a" / "records.csv");
    EXPECT_EQ(records.substr(0, records.find('\n')),
              "model,dataset,perturbation_id,L,temperature,N,aggregator,trial,window_index,loss_mse,loss_mae,"
              "mean_similarity,status");
    // (400 - 64 - 8) / 64 + 1 = 6 windows; 2 budgets x 2 aggregators each.
    EXPECT_EQ(lines(records), 1u + 6u * 4u);
    EXPECT_TRUE(fs::exists(dir_ / "a" / "summary.json"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "plotdata" / "scale_temperature_em.csv"));
}

TEST_F(CliTest, RecordsAreIndependentOfJobs) {
    ASSERT_EQ(run("scale-sweep " + kSmall + " --values 0.3,0.9 --perturbations gaussian --jobs 1 --out " +
                  (dir_ / "j1").string()),
              0);
    ASSERT_EQ(run("scale-sweep " + kSmall + " --values 0.3,0.9 --perturbations gaussian --jobs 4 --out " +
                  (dir_ / "j4").string()),
              0);
    const std::string a = read(dir_ / "j1" / "records.csv");
    EXPECT_GT(lines(a), 1u);
    EXPECT_EQ(a, read(dir_ / "j4" / "records.csv"));
}

TEST_F(CliTest, DefaultTemperatureGrid) {
    const auto grid = temperature_grid();
    ASSERT_EQ(grid.size(), 13u);
    EXPECT_EQ(grid.front(), 0.0);
    EXPECT_DOUBLE_EQ(grid.back(), 1.2);
    EXPECT_EQ(context_length_grid().front(), 32u);
    EXPECT_EQ(context_length_grid().back(), 1024u);
    ASSERT_EQ(run("scale-sweep " + kSmall + " --max-windows 1 --out " + (dir_ / "g").string()), 0);
    // header + 13 temperatures x 2 budgets
    EXPECT_EQ(lines(read(dir_ / "g" / "plotdata" / "scale_temperature_em.csv")), 1u + 26u);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run("scale-sweep --no-such-flag"), 1);
    EXPECT_EQ(run("scale-sweep --dataset " + (dir_ / "missing.csv").string() + " --out " + dir_.string()), 3);
    EXPECT_EQ(run("scale-sweep " + kSmall + " --backend external:/nonexistent/forecaster --out " + dir_.string()), 2);
    std::ofstream(dir_ / "bad.json") << R"({"no_such_key": 1})";
    EXPECT_EQ(run("scale-sweep --config " + (dir_ / "bad.json").string()), 1);
    std::ofstream(dir_ / "text.csv") << "OT\n1.0\nhello\n";
    EXPECT_EQ(run("scale-sweep --dataset " + (dir_ / "text.csv").string() + " --out " + dir_.string()), 3);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
    std::ofstream(dir_ / "cfg.json") << R"({"dataset": "synthetic:400", "context_length": 64, "horizon": 8,
        "stride": 64, "budgets": [1, 2], "sweep_values": [0.5], "seed": 3})";
    ASSERT_EQ(run("scale-sweep --config " + (dir_ / "cfg.json").string() + " --horizon 4 --out " + (dir_ / "c").string()),
              0);
    const std::string summary = read(dir_ / "c" / "summary.json");
    EXPECT_NE(summary.find("\"horizon\": 4"), std::string::npos);
    EXPECT_NE(summary.find("\"seed\": 3"), std::string::npos);
}

TEST_F(CliTest, PerturbSweepWritesFailureTable) {
    ASSERT_EQ(run("perturb-sweep " + kSmall + " --perturbations gaussian,random --out " + (dir_ / "p").string()), 0)
        << read(dir_ / "log.txt");
    const std::string failures = read(dir_ / "p" / "failures.csv");
    EXPECT_EQ(failures.substr(0, failures.find('\n')),
              "perturbation_id,aggregator,N,baseline_mse,perturbed_mse,ratio,failed");
    // two perturbations x two aggregators
    EXPECT_EQ(lines(failures), 5u);
    EXPECT_TRUE(fs::exists(dir_ / "p" / "valid_perturbations.txt"));
}

TEST_F(CliTest, TheoryCommand) {
    ASSERT_EQ(run("theory --rho 0.3 --lgood 0.5 --lbad 2.0 --l0 1.0 --n 1,4 --mc-trials 20000 --out " +
                  (dir_ / "t").string()),
              0);
    const std::string cross = read(dir_ / "t" / "crossover.csv");
    EXPECT_NE(cross.find("0.3,0.5,2,1,"), std::string::npos) << cross;
    EXPECT_NE(cross.find(",4,4\n"), std::string::npos) << cross;
    EXPECT_EQ(lines(read(dir_ / "t" / "theory.csv")), 3u);
}

TEST_F(CliTest, ValidateBackend) {
    EXPECT_EQ(run(std::string("validate-backend --backend external:") + MOCK_BACKEND_PATH), 0);
    EXPECT_NE(read(dir_ / "log.txt").find("conformant"), std::string::npos);
    EXPECT_EQ(run(std::string("validate-backend --backend 'external:") + MOCK_BACKEND_PATH + " --exit-after 1'"), 2);
}

TEST_F(CliTest, ExternalBackendSweep) {
    ASSERT_EQ(run("scale-sweep " + kSmall + " --values 0.5 --backend 'external:" + MOCK_BACKEND_PATH +
                  "' --backend-procs 2 --out " + (dir_ / "e").string()),
              0)
        << read(dir_ / "log.txt");
    EXPECT_EQ(lines(read(dir_ / "e" / "records.csv")), 1u + 6u * 4u);
}
