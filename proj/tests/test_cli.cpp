#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cascade/cli/commands.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cascade;

namespace
{

const std::string cli_path = CASCADE_CLI_PATH;
const std::string config_dir = CASCADE_CONFIG_DIR;

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("cascade_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Runs the binary and returns its exit status; stderr goes to dir/stderr.txt.
int run(const std::string& args, const fs::path& dir)
{
    const std::string cmd = "\"" + cli_path + "\" " + args + " > \"" + (dir / "stdout.txt").string() + "\" 2> \"" +
                            (dir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cfg(const std::string& name) { return "--config \"" + config_dir + "/" + name + "\""; }
std::string out(const fs::path& dir) { return "--out \"" + dir.string() + "\""; }

} // namespace

TEST(Cli, HelpExitsCleanly)
{
    const auto dir = scratch("help");
    EXPECT_EQ(run("--help", dir), 0);
    EXPECT_NE(slurp(dir / "stdout.txt").find("simulate"), std::string::npos);
}

TEST(Cli, UnknownVerbOrFlagIsConfigError)
{
    const auto dir = scratch("badverb");
    EXPECT_EQ(run("explode", dir), 2);
    EXPECT_EQ(run("simulate --bogus", dir), 2);
    EXPECT_EQ(run("simulate " + cfg("strob_chain.json") + " --method nonsense " + out(dir), dir), 2);
}

TEST(Cli, MalformedConfigNamesTheKey)
{
    const auto dir = scratch("malformed");
    auto j = json::parse(slurp(config_dir + "/strob_chain.json"));
    j["cavities"][1]["kapa"] = 3.0;
    const auto path = dir / "bad.json";
    std::ofstream(path) << j.dump();
    EXPECT_EQ(run("simulate --config \"" + path.string() + "\" " + out(dir / "o"), dir), 2);
    const auto err = json::parse(slurp(dir / "stderr.txt"));
    EXPECT_EQ(err.at("exit_code"), 2);
    EXPECT_EQ(err.at("error").at("type"), "config");
    EXPECT_EQ(err.at("error").at("key"), "cavities[1].kapa");
    EXPECT_TRUE(fs::exists(dir / "o" / "error.json"));

    std::ofstream(dir / "broken.json") << "{ not json";
    EXPECT_EQ(run("simulate --config \"" + (dir / "broken.json").string() + "\" " + out(dir), dir), 2);
    EXPECT_EQ(run("simulate " + out(dir), dir), 2);
}

TEST(Cli, SimulateAutoPicksStroboscopicAndWritesOutputs)
{
    const auto dir = scratch("simulate");
    ASSERT_EQ(run("simulate " + cfg("strob_chain.json") + " " + out(dir) + " --per-cavity", dir), 0);
    const auto sol = json::parse(slurp(dir / "solution.json"));
    EXPECT_EQ(sol.at("method"), "strob-weak");
    EXPECT_EQ(sol.at("requested_method"), "auto");
    EXPECT_EQ(sol.at("n_cavities"), 3);
    EXPECT_EQ(sol.at("per_cavity_spectra").size(), 3u);
    EXPECT_TRUE(fs::exists(dir / "spectrum.csv"));
    const auto manifest = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest.at("command"), "simulate");
    EXPECT_EQ(manifest.at("config_hash").get<std::string>().size(), 64u);
    EXPECT_EQ(manifest.at("outputs").size(), 3u);
}

TEST(Cli, OutputsAreDeterministic)
{
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    ASSERT_EQ(run("simulate " + cfg("cw_finite.json") + " " + out(a), a), 0);
    ASSERT_EQ(run("simulate " + cfg("cw_finite.json") + " " + out(b) + " --threads 1 --seed 7", b), 0);
    EXPECT_EQ(slurp(a / "spectrum.csv"), slurp(b / "spectrum.csv"));
    EXPECT_EQ(slurp(a / "solution.json"), slurp(b / "solution.json"));
    const auto ma = json::parse(slurp(a / "manifest.json"));
    const auto mb = json::parse(slurp(b / "manifest.json"));
    EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
}

TEST(Cli, ConfigHashTracksResolvedParameters)
{
    const auto dir = scratch("hash");
    auto j = json::parse(slurp(config_dir + "/strob_chain.json"));
    std::ofstream(dir / "a.json") << j.dump();
    j["cavities"][0]["kappa"] = j["cavities"][0]["kappa"].get<double>() * 1.001;
    std::ofstream(dir / "b.json") << j.dump();
    // Same parameters, reordered and with a default written out.
    auto same = json::parse(slurp(config_dir + "/strob_chain.json"));
    same["delay_T"] = 0.0;
    std::ofstream(dir / "c.json") << same.dump(4);

    auto hash = [&](const std::string& file) {
        const auto o = dir / ("out_" + file);
        EXPECT_EQ(run("simulate --config \"" + (dir / file).string() + "\" " + out(o), dir), 0);
        return json::parse(slurp(o / "manifest.json")).at("config_hash").get<std::string>();
    };
    const auto ha = hash("a.json");
    EXPECT_NE(ha, hash("b.json"));
    EXPECT_EQ(ha, hash("c.json"));
}

TEST(Cli, SweepWithoutConfig)
{
    const auto dir = scratch("sweep");
    ASSERT_EQ(run("sweep --set eta=1,0.9 --set N=1:4 " + out(dir), dir), 0);
    const auto csv = slurp(dir / "sweep.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "eta,N,eta_used,N_used,ratio,snr_bound,qfi");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
    EXPECT_EQ(run("sweep " + out(dir), dir), 2);
    EXPECT_EQ(run("sweep --set eta=abc " + out(dir), dir), 2);
}

TEST(Cli, SweepOverConfigParameter)
{
    const auto dir = scratch("sweep_cfg");
    ASSERT_EQ(run("sweep " + cfg("sweep_base.json") + " --set N=1:3 " + out(dir), dir), 0);
    const auto csv = slurp(dir / "sweep.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Cli, CompareWritesTable)
{
    const auto dir = scratch("compare");
    ASSERT_EQ(run("compare " + cfg("cw_finite.json") + " " + out(dir), dir), 0);
    const auto j = json::parse(slurp(dir / "compare.json"));
    EXPECT_TRUE(j.contains("diagnostics"));
    EXPECT_TRUE(fs::exists(dir / "compare.csv"));
}

TEST(Cli, ThermalReportsMaximumTemperature)
{
    const auto dir = scratch("thermal");
    ASSERT_EQ(run("thermal " + cfg("thermal_example.json") + " " + out(dir), dir), 0);
    const auto j = json::parse(slurp(dir / "thermal.json"));
    EXPECT_NEAR(j.at("t_max").get<double>(), 7.498877288198413, 0.02 * 7.5);
    EXPECT_FALSE(j.at("valid").get<bool>());
    ASSERT_EQ(run("thermal " + cfg("thermal_example.json") + " --temperature 0.5 " + out(dir), dir), 0);
    EXPECT_TRUE(json::parse(slurp(dir / "thermal.json")).at("valid").get<bool>());
    ASSERT_EQ(run("thermal " + cfg("thermal_example.json") + " --temperature 50 " + out(dir), dir), 0);
    EXPECT_FALSE(json::parse(slurp(dir / "thermal.json")).at("valid").get<bool>());
}

TEST(Cli, NoptTableAndNumericFailure)
{
    const auto dir = scratch("nopt");
    ASSERT_EQ(run("nopt " + out(dir), dir), 0);
    const auto csv = slurp(dir / "nopt.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + static_cast<long>(cli::default_eta_list().size()));
    EXPECT_NE(csv.find("\n0.9,"), std::string::npos);

    EXPECT_EQ(run("nopt --eta 0.9,1 " + out(dir), dir), 3);
    const auto err = json::parse(slurp(dir / "stderr.txt"));
    EXPECT_EQ(err.at("error").at("type"), "numeric");
    EXPECT_EQ(run("nopt --eta 1.5 " + out(dir), dir), 2);
}

TEST(Cli, ApplicationPresets)
{
    const auto dir = scratch("app");
    ASSERT_EQ(run("app --preset lhc " + out(dir), dir), 0);
    const auto j = json::parse(slurp(dir / "app.json"));
    EXPECT_NEAR(j.at("result").at("displacement").get<double>() / 1.4296e-16, 1.0, 1e-3);
    EXPECT_EQ(run("app --preset dm " + out(dir), dir), 0);
    EXPECT_EQ(run("app --preset unknown " + out(dir), dir), 2);
    EXPECT_EQ(run("app " + cfg("strob_chain.json") + " " + out(dir), dir), 2);
}

TEST(Cli, InProcessGuardMapsErrors)
{
    std::ostringstream err;
    const auto dir = scratch("guard");
    EXPECT_EQ(cli::run_guarded([]() -> cli::RunManifest { throw NumericError("boom"); }, dir.string(), err), 3);
    EXPECT_EQ(cli::run_guarded([]() -> cli::RunManifest { throw GridError("coarse"); }, dir.string(), err), 2);
    EXPECT_EQ(cli::run_guarded([]() -> cli::RunManifest { throw std::logic_error("bug"); }, dir.string(), err), 1);
    EXPECT_TRUE(fs::exists(dir / "error.json"));
}
