#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "divscale/dataset.hpp"
#include "divscale/error.hpp"

using namespace divscale;
namespace fs = std::filesystem;

namespace {

const std::string kTiny = std::string(TEST_DATA_DIR) + "/tiny.csv";

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("divscale_ds_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path file(const std::string& name, const std::string& body) const {
        std::ofstream(path_ / name) << body;
        return path_ / name;
    }

private:
    fs::path path_;
};

}  // namespace

TEST(Load, TargetColumnAndFrequency) {
    const auto s = load_dataset(kTiny, "OT");
    ASSERT_EQ(s.length(), 10u);
    EXPECT_EQ(s.channels(), 1u);
    EXPECT_DOUBLE_EQ(s.values(0, 0), 30.531);
    EXPECT_DOUBLE_EQ(s.values(9, 0), 17.446);
    EXPECT_EQ(s.freq_hint, "H");
    EXPECT_EQ(s.name, "tiny:OT");
    EXPECT_DOUBLE_EQ(load_dataset(kTiny, "HUFL").values(1, 0), 5.693);
}

TEST(Load, Errors) {
    TempDir dir;
    EXPECT_THROW(load_dataset(dir.file("missing_col.csv", "a,b\n1,2\n"), "OT"), DatasetError);
    EXPECT_THROW(load_dataset(dir.file("empty.csv", ""), "OT"), DatasetError);
    EXPECT_THROW(load_dataset(dir.file("header_only.csv", "OT\n"), "OT"), DatasetError);
    EXPECT_THROW(load_dataset("/nonexistent/file.csv", "OT"), DatasetError);
    try {
        load_dataset(dir.file("bad.csv", "OT\n1.0\nabc\n"), "OT");
        FAIL();
    } catch (const DatasetError& e) {
        EXPECT_NE(std::string(e.what()).find("'abc' at line 3"), std::string::npos) << e.what();
    }
}

TEST(Split, Counts) {
    const auto s = load_dataset(kTiny, "OT", SplitSpec::counts(5, 2, 2));
    ASSERT_EQ(s.length(), 2u);
    EXPECT_DOUBLE_EQ(s.values(0, 0), 23.144);
    EXPECT_THROW(load_dataset(kTiny, "OT", SplitSpec::counts(8, 2, 2)), DatasetError);
}

TEST(Split, Fractions) {
    const auto s = load_dataset(kTiny, "OT", SplitSpec::fractions(0.6, 0.2));
    ASSERT_EQ(s.length(), 2u);
    EXPECT_DOUBLE_EQ(s.values(0, 0), 21.667);
    EXPECT_THROW(SplitSpec::fractions(0.8, 0.3), ConfigError);
}

TEST(Split, EttHourlyPresetOnFullFile) {
    TempDir dir;
    std::string body = "date,OT\n";
    for (int i = 0; i < 14400; ++i) body += "2016-07-01 00:00:00," + std::to_string(i) + "\n";
    const auto s = load_dataset(dir.file("ETTh1.csv", body), "OT", SplitSpec::preset("etth1"));
    ASSERT_EQ(s.length(), 2880u);
    EXPECT_EQ(s.values(0, 0), 11520.0);
    EXPECT_EQ(s.values(2879, 0), 14399.0);
    EXPECT_THROW(SplitSpec::preset("nope"), ConfigError);
}

TEST(Freq, Inference) {
    EXPECT_EQ(infer_freq("2016-07-01 00:00:00", "2016-07-01 01:00:00"), "H");
    EXPECT_EQ(infer_freq("2016-07-01 00:00:00", "2016-07-01 00:15:00"), "15min");
    EXPECT_EQ(infer_freq("2016-07-01 00:00:00", "2016-07-02 00:00:00"), "D");
    EXPECT_EQ(infer_freq("2016-07-01 00:00:00", "2016-07-01 00:00:10"), "10s");
    EXPECT_FALSE(infer_freq("garbage", "2016-07-01 00:00:00"));
}

TEST(Windows, CountAndContent) {
    EXPECT_EQ(window_count(100, 50, 10, 10), 5u);
    EXPECT_EQ(window_count(60, 50, 10, 10), 1u);
    EXPECT_EQ(window_count(59, 50, 10, 10), 0u);
    const auto s = load_dataset(kTiny, "OT");
    const auto w = sliding_windows(s, 4, 2, 3);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[1].offset, 3u);
    EXPECT_DOUBLE_EQ(w[1].context.values(0, 0), 25.044);
    EXPECT_DOUBLE_EQ(w[1].truth.values(0, 0), 23.144);
    EXPECT_EQ(w[1].context.freq_hint, "H");
    EXPECT_THROW(sliding_windows(s, 8, 3, 1), InsufficientLength);
    EXPECT_THROW(sliding_windows(s, 4, 2, 0), InvalidArgument);
}
