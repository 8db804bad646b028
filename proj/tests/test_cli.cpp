// Runs the stap_bench executable end to end.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("stap_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + STAP_BENCH_EXE + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (const char c : text) n += c == '\n' ? 1 : 0;
    return n;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

const char* kToyConfig = R"(num_sensors = 2
num_pulses = 2
[jammer]
azimuth_deg = 30
jnr_db = 20
[experiment]
kind = sinr-vs-snapshots
algorithms = smi-mvdr, lr-evd, lr-krylov, lr-jio, lr-jidf, sa-mvdr, ka-mvdr
runs = 2
snapshot_grid = 4:4:16
[algorithm]
rank = 2
branches = 2
interpolator_len = 2
)";

}  // namespace

TEST(Cli, ComplexityRowCount) {
    const auto dir = scratch("complexity");
    write(dir / "c.conf", "[experiment]\nkind = complexity\nalgorithms = smi-mvdr, lr-jidf, ka-mvdr\nm_grid = 16, 32, 64, 128, 256\n");
    ASSERT_EQ(run("--config " + (dir / "c.conf").string() + " --out " + (dir / "out").string()), 0);
    const std::string csv = slurp(dir / "out" / "complexity.csv");
    EXPECT_EQ(count_lines(csv), 1U + 3U * 5U);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "algorithm,x_value,metric,std,runs");
    EXPECT_TRUE(fs::exists(dir / "out" / "complexity_lr-jidf.dat"));
}

TEST(Cli, SameSeedGivesByteIdenticalOutput) {
    const auto dir = scratch("determinism");
    write(dir / "toy.conf", kToyConfig);
    const auto conf = (dir / "toy.conf").string();
    ASSERT_EQ(run("--config " + conf + " --seed 99 --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run("--config " + conf + " --seed 99 --threads 2 --out " + (dir / "b").string()), 0);
    ASSERT_EQ(run("--config " + conf + " --seed 100 --out " + (dir / "c").string()), 0);
    const std::string a = slurp(dir / "a" / "sinr-vs-snapshots.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b" / "sinr-vs-snapshots.csv"));
    EXPECT_NE(a, slurp(dir / "c" / "sinr-vs-snapshots.csv"));
    EXPECT_EQ(count_lines(a), 1U + 8U * 4U);  // optimal plus seven algorithms, four K values
}

TEST(Cli, EnvironmentSeedIsFallback) {
    const auto dir = scratch("envseed");
    write(dir / "toy.conf", kToyConfig);
    const auto conf = (dir / "toy.conf").string();
    ASSERT_EQ(run("--config " + conf + " --seed 5 --out " + (dir / "flag").string()), 0);
    ASSERT_EQ(run("--config " + conf + " --out " + (dir / "env").string(), "STAP_BENCH_SEED=5"), 0);
    EXPECT_EQ(slurp(dir / "flag" / "sinr-vs-snapshots.csv"), slurp(dir / "env" / "sinr-vs-snapshots.csv"));
    EXPECT_EQ(run("--config " + conf + " --out " + (dir / "x").string(), "STAP_BENCH_SEED=abc"), 2);
}

TEST(Cli, ToySmokeBenchmarkIsFast) {
    const auto dir = scratch("smoke");
    write(dir / "toy.conf", kToyConfig);
    const auto start = std::chrono::steady_clock::now();
    ASSERT_EQ(run("--config " + (dir / "toy.conf").string() + " --out " + (dir / "out").string()), 0);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5.0);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("exit");
    write(dir / "bad.conf", "num_sensors = 0\n");
    EXPECT_EQ(run("--config " + (dir / "bad.conf").string()), 2);
    write(dir / "unknown.conf", "colour = blue\n");
    EXPECT_EQ(run("--config " + (dir / "unknown.conf").string()), 2);
    EXPECT_EQ(run("--experiment sideways"), 2);
    EXPECT_EQ(run("--runs 0 --experiment complexity"), 2);
    EXPECT_EQ(run("--no-such-flag"), 2);
    EXPECT_EQ(run("--config " + (dir / "missing.conf").string()), 1);
    // output directory path collides with a regular file
    write(dir / "blocker", "x");
    EXPECT_EQ(run("--experiment complexity --out " + (dir / "blocker").string()), 1);
}

TEST(Cli, FailureBudgetExceededExitsThree) {
    // a 16-element toy scene with K = 2 snapshots and no loading leaves SMI singular on every run
    const auto dir = scratch("budget");
    write(dir / "sing.conf", R"(num_sensors = 4
num_pulses = 4
[experiment]
algorithms = smi-mvdr
runs = 3
snapshot_grid = 2
[algorithm]
loading = 0
)");
    EXPECT_EQ(run("--config " + (dir / "sing.conf").string() + " --out " + (dir / "out").string()), 3);
    EXPECT_TRUE(fs::exists(dir / "out" / "sinr-vs-snapshots.csv"));
}

TEST(Cli, ExportsCovariance) {
    const auto dir = scratch("export");
    ASSERT_EQ(run("--experiment complexity --out " + (dir / "out").string() + " --export-covariance " +
                  (dir / "r.bin").string()),
              0);
    const std::string bytes = slurp(dir / "r.bin");
    EXPECT_EQ(bytes.substr(0, 8), "STAPCOV1");
    EXPECT_EQ(bytes.size(), 8U + 16U + 64U * 64U * 16U);
}
