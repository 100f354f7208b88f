#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "m3net_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

/// Runs the CLI in the work directory and returns its exit status.
int run(const std::string& args) {
    const std::string cmd = "cd '" + work_dir().string() + "' && '" M3NET_CLI_PATH "' " + args + " >cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Cli, SynthIsDeterministic) {
    ASSERT_EQ(run("--n 60 synth --out a.jsonl"), 0);
    ASSERT_EQ(run("--n 60 synth --out b.jsonl"), 0);
    EXPECT_EQ(slurp(work_dir() / "a.jsonl"), slurp(work_dir() / "b.jsonl"));
    ASSERT_EQ(run("--n 50 --frac-both 1.0 synth --out complete.jsonl"), 0);
    std::ifstream in(work_dir() / "complete.jsonl");
    int lines = 0;
    for (std::string line; std::getline(in, line);) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_FALSE(j["biomarkers"].is_null());
        EXPECT_FALSE(j["image_features"].is_null());
        ++lines;
    }
    EXPECT_EQ(lines, 50);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("cv missing.jsonl"), 3);
    EXPECT_EQ(run("--epochs 0 cv missing.jsonl"), 2);
    EXPECT_EQ(run("--frac-both 0.9 --frac-image-only 0.9 synth --out x.jsonl"), 2);
    EXPECT_EQ(run("--no-such-option synth --out x.jsonl"), 2);
}

TEST(Cli, CvReportCarriesVariantTagAndConfig) {
    ASSERT_EQ(run("--n 120 synth --out cv.jsonl"), 0);
    ASSERT_EQ(run("--variant m3net2 --dim 5 --epochs 2 --bootstrap-resamples 100 --out-dir out cv cv.jsonl"), 0);
    const auto j = nlohmann::json::parse(slurp(work_dir() / "out" / "cv_m3net2_dim_5.json"));
    EXPECT_EQ(j["method"], "M3Net2 (Dim=5)");
    EXPECT_EQ(j["config"]["train"]["epochs"], 2);
    EXPECT_NE(slurp(work_dir() / "out" / "cv_m3net2_dim_5.txt").find("M3Net2 (Dim=5)"), std::string::npos);
}

TEST(Cli, TrainPredictStats) {
    ASSERT_EQ(run("--n 90 synth --out tp.jsonl"), 0);
    ASSERT_EQ(run("--epochs 2 train tp.jsonl --model-out model.json"), 0);
    ASSERT_EQ(run("predict model.json tp.jsonl --out pred.csv"), 0);
    std::ifstream in(work_dir() / "pred.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "id,label,risk,path");
    int rows = 0;
    while (std::getline(in, line)) {
        const std::string path = line.substr(line.rfind(',') + 1);
        EXPECT_TRUE(path == "combined" || path == "image" || path == "biomarker") << path;
        ++rows;
    }
    EXPECT_EQ(rows, 90);
    ASSERT_EQ(run("stats pred.csv pred.csv --labels tp.jsonl --out stats.json"), 0);
    const auto s = nlohmann::json::parse(slurp(work_dir() / "stats.json"));
    EXPECT_EQ(s["p_two_tailed"], 1.0);
    EXPECT_EQ(s["a"]["auc"], s["b"]["auc"]);
}

TEST(Cli, GradcheckNegativeControl) {
    EXPECT_EQ(run("gradcheck --corrupt-gradient"), 4);
}
