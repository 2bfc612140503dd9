#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fdelab/fdelab.hpp"

using namespace fdelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fdelab_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Runs the CLI with FDELAB_OUT pointing at `out`; returns the exit status and captures stdout.
int run_cli(const std::string& args, const fs::path& out, std::string* stdout_text = nullptr) {
    const fs::path log = out / "stdout.txt";
    const std::string cmd = "FDELAB_OUT='" + out.string() + "' '" FDELAB_CLI_PATH "' " + args + " > '" + log.string() +
                            "' 2> /dev/null";
    const int status = std::system(cmd.c_str());
    if (stdout_text) {
        std::ifstream in(log);
        std::stringstream ss;
        ss << in.rdbuf();
        *stdout_text = ss.str();
    }
    fs::remove(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<fs::path> run_dirs(const fs::path& out) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(out))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config() {
    RunConfig c;
    c.name = "small";
    c.domain = DomainSpec::ball(1.0, 3, 48);
    c.m = 0.5;
    InitialSpec bump;
    bump.kind = InitialSpec::Kind::GaussianBump;
    bump.width = 0.2;
    c.initial = {bump};
    c.flow.cdp.dt0 = 1e-8;
    c.flow.cdp.dt_max = 1e-3;
    c.diagnostics = {{"monotonicity", {{"tolerance", 1e-6}}}, {"extinction_sandwich", {{"p", 1.5}}}};
    c.trajectory_csv_stride = 5;
    return c;
}

}  // namespace

TEST(Config, EveryPresetRoundTripsThroughJson) {
    for (const auto& name : preset_names()) {
        const RunConfig c = preset(name);
        EXPECT_EQ(c.name, name);
        EXPECT_EQ(config_from_json(to_json(c)), c) << name;
        EXPECT_NO_THROW(validate(c)) << name;
    }
}

TEST(Config, UnknownPresetListsTheValidNames) {
    try {
        preset("no-such-preset");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("separable-gold"), std::string::npos);
    }
}

TEST(Config, RejectsUnknownKeysAndInvalidValues) {
    json j = to_json(small_config());
    j["bogus"] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError);

    RunConfig c = small_config();
    c.diagnostics.push_back({"not_a_diagnostic", json::object()});
    EXPECT_THROW(validate(c), ConfigError);

    c = small_config();
    c.initial[0].kind = InitialSpec::Kind::SeparableProfile;
    c.initial[0].p = 3.0;  // must equal 1/m
    EXPECT_THROW(validate(c), ConfigError);

    c = small_config();
    c.initial[0].kind = InitialSpec::Kind::NodalFile;
    c.initial[0].path = "/nonexistent/file.csv";
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, NullStepCapMeansUnbounded) {
    json j = to_json(small_config());
    j["flow"]["cdp"]["dt_max"] = nullptr;
    EXPECT_TRUE(std::isinf(config_from_json(j).flow.cdp.dt_max));
}

TEST(Io, CsvRoundTrip) {
    const fs::path dir = scratch("csv");
    Table t{{"x", "u"}, {{0.1, 1.0 / 3.0}, {0.2, 1e-300}, {0.3, 12345.678}}};
    write_csv(dir / "t.csv", t);
    const Table back = read_csv(dir / "t.csv");
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
    fs::remove_all(dir);
}

TEST(Io, NodalFileAcceptsOneOrTwoColumns) {
    const fs::path dir = scratch("nodal");
    std::ofstream(dir / "one.csv") << "1\n2\n3\n";
    std::ofstream(dir / "two.csv") << "r,u\n0.1,1\n0.2,2\n0.3,3\n";
    EXPECT_EQ(read_nodal_file(dir / "one.csv", 3), (Field{1, 2, 3}));
    EXPECT_EQ(read_nodal_file(dir / "two.csv", 3), (Field{1, 2, 3}));
    EXPECT_THROW(read_nodal_file(dir / "one.csv", 4), ConfigError);
    fs::remove_all(dir);
}

TEST(Cli, EmitPrintsThePresetConfig) {
    const fs::path out = scratch("emit");
    std::string text;
    EXPECT_EQ(run_cli("preset benilan-crandall --emit", out, &text), 0);
    EXPECT_EQ(config_from_json(json::parse(text)), preset("benilan-crandall"));
    EXPECT_TRUE(run_dirs(out).empty());
    fs::remove_all(out);
}

TEST(Cli, UsageErrorsExitWithTwoAndWriteNothing) {
    const fs::path out = scratch("usage");
    EXPECT_EQ(run_cli("run '" + (out / "missing.json").string() + "'", out), 2);
    EXPECT_EQ(run_cli("preset no-such-preset", out), 2);
    EXPECT_EQ(run_cli("frobnicate", out), 2);
    EXPECT_EQ(run_cli("report '" + out.string() + "'", out), 2);
    EXPECT_TRUE(run_dirs(out).empty());
    fs::remove_all(out);
}

TEST(Cli, RepeatedRunsGiveIdenticalSummariesInDistinctDirectories) {
    const fs::path out = scratch("repeat");
    const fs::path cfg = out / "small.json";
    std::ofstream(cfg) << to_json(small_config()).dump(2);
    ASSERT_EQ(run_cli("run '" + cfg.string() + "'", out), 0);
    ASSERT_EQ(run_cli("run '" + cfg.string() + "'", out), 0);
    const auto dirs = run_dirs(out);
    ASSERT_EQ(dirs.size(), 2u);
    EXPECT_NE(dirs[0], dirs[1]);
    EXPECT_EQ(slurp(dirs[0] / "summary.json"), slurp(dirs[1] / "summary.json"));

    for (const char* f : {"config.json", "trajectory_0.csv", "trajectory_0.json", "summary.json",
                          "reports/monotonicity.json", "reports/extinction_sandwich.json"})
        EXPECT_TRUE(fs::exists(dirs[0] / f)) << f;
    EXPECT_EQ(config_from_json(json::parse(slurp(dirs[0] / "config.json"))), small_config());
    const Table traj = read_csv(dirs[0] / "trajectory_0.csv");
    EXPECT_FALSE(traj.rows.empty());

    std::string text;
    EXPECT_EQ(run_cli("report '" + dirs[0].string() + "'", out, &text), 0);
    EXPECT_NE(text.find("PASS"), std::string::npos);
    fs::remove_all(out);
}

TEST(Cli, FailingDiagnosticGivesExitOne) {
    const fs::path out = scratch("fail");
    RunConfig c = small_config();
    // A negative tolerance cannot be met.
    c.diagnostics = {{"monotonicity", {{"tolerance", -1.0}}}};
    const fs::path cfg = out / "fail.json";
    std::ofstream(cfg) << to_json(c).dump(2);
    EXPECT_EQ(run_cli("run '" + cfg.string() + "'", out), 1);
    const auto dirs = run_dirs(out);
    ASSERT_EQ(dirs.size(), 1u);
    EXPECT_EQ(json::parse(slurp(dirs[0] / "summary.json")).at("status"), "FAIL");
    EXPECT_EQ(run_cli("report '" + dirs[0].string() + "'", out), 1);
    fs::remove_all(out);
}
