// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "otfsce/errors.hpp"
#include "otfsce/harness.hpp"

using namespace otfsce;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) { return fs::temp_directory_path() / ("otfsce_test_" + name); }

fs::path scratch(const std::string& name) {
    const fs::path dir = scratch_dir(name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(OTFSCE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip") {
    ExperimentConfig c;
    c.grid.M = 32;
    c.scenario.num_paths = 3;
    c.scenario.max_doppler_hz = 812.5;
    c.pilot = {3, 7, 2.5};
    c.search = {0.5, 0.05, 4};
    c.sweep_db = {0.0, 12.5};
    c.trials = 17;
    c.mode = Mode::kParamMse;
    c.ipi_elimination = false;
    c.seed = 0xDEADBEEFCAFEULL;
    c.output_dir = "elsewhere";
    const ExperimentConfig back = parse_config(to_yaml(c));
    CHECK(to_yaml(back) == to_yaml(c));
    CHECK(back.seed == c.seed);
    CHECK(back.scenario.max_doppler_hz == c.scenario.max_doppler_hz);
    CHECK(back.mode == Mode::kParamMse);
    CHECK(config_hash(back) == config_hash(c));

    ExperimentConfig d = c;
    d.threads = 4;
    d.output_dir = "other";
    CHECK(config_hash(d) == config_hash(c));
    d.trials = 18;
    CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("config errors carry line numbers") {
    CHECK(config_error("grid:\n  M: 64\n  bogus: 3\n") == "line 3: unknown key 'bogus' in grid");
    CHECK(config_error("trials: 10\nmode: sideways\n").rfind("line 2:", 0) == 0);
    CHECK(config_error("sweep_db: [10, 20\n").rfind("line ", 0) == 0);
    CHECK_THROWS_WITH_AS(parse_config("trials: 0\n").validate(), "trials must be >= 1", ConfigError);
    CHECK(config_error("grid:\n  M: -4\n").rfind("line 2:", 0) == 0);
    CHECK(config_error("").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("mode names") {
    for (Mode m : {Mode::kNmse, Mode::kParamMse, Mode::kSer, Mode::kOracleCheck}) {
        CHECK(parse_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_mode("bogus"), ConfigError);
}

TEST_CASE("derived seeds are deterministic and distinct") {
    CHECK(derive_seed(1, 0, 5) == derive_seed(1, 0, 5));
    CHECK(derive_seed(1, 0, 5) != derive_seed(1, 0, 6));
    CHECK(derive_seed(1, 0, 5) != derive_seed(1, 1, 5));
    CHECK(derive_seed(1, 0, 5) != derive_seed(2, 0, 5));
}

TEST_CASE("linear-domain averaging") {
    // Mean of 0.1 and 0.001 is 0.0505, not the -20 dB mean of the dB values.
    const DbSummary s = summarize_linear_as_db({0.1, 0.001});
    CHECK(s.mean_db == doctest::Approx(10.0 * std::log10(0.0505)));
    CHECK(s.stderr_db > 0.0);
    const DbSummary flat = summarize_linear_as_db({0.01, 0.01, 0.01});
    CHECK(flat.mean_db == doctest::Approx(-20.0));
    CHECK(flat.stderr_db == doctest::Approx(0.0));
}

TEST_CASE("identical seed gives byte-identical outputs regardless of threads") {
    ExperimentConfig c;
    c.trials = 6;
    c.sweep_db = {20.0, 30.0};
    for (Mode mode : {Mode::kNmse, Mode::kParamMse, Mode::kSer}) {
        c.mode = mode;
        c.trials = mode == Mode::kSer ? 3 : 6;
        c.threads = 1;
        c.output_dir = scratch("one");
        write_outputs(c, run_experiment(c));
        c.threads = 2;
        c.output_dir = scratch("two");
        write_outputs(c, run_experiment(c));
        const std::string a = slurp(scratch_dir("one") / "results.csv");
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(scratch_dir("two") / "results.csv"));
        CHECK(slurp(scratch_dir("one") / "manifest.json") == slurp(scratch_dir("two") / "manifest.json"));
    }
}

TEST_CASE("single trial run twice is byte-identical") {
    ExperimentConfig c;
    c.trials = 1;
    c.sweep_db = {25.0};
    c.seed = 99;
    CHECK(run_experiment(c).table.to_csv() == run_experiment(c).table.to_csv());
}

TEST_CASE("result table and manifest layout") {
    ExperimentConfig c;
    c.trials = 4;
    c.sweep_db = {10.0, 40.0};
    const RunReport r = run_experiment(c);
    CHECK(r.table.columns ==
          std::vector<std::string>{"sweep_db", "metric_mean", "metric_stderr", "trials_ok", "trials_failed"});
    REQUIRE(r.table.rows.size() == 2);
    CHECK(r.table.at(1, "sweep_db") == 40.0);
    CHECK(r.table.at(0, "trials_ok") == 4.0);
    CHECK(r.trials_ok == 8);
    CHECK_THROWS_AS(r.table.at(0, "nope"), std::out_of_range);

    const auto j = nlohmann::json::parse(manifest_json(c, r));
    CHECK(j["seed"] == 1);
    CHECK(j["version"] == kVersion);
    CHECK(j["config_hash"].get<std::string>().size() == 16);
    CHECK(parse_config(j["config_yaml"].get<std::string>()).trials == 4);
}

TEST_CASE("oracle-check mode agrees on noiseless single paths") {
    ExperimentConfig c;
    c.mode = Mode::kOracleCheck;
    c.noiseless = true;
    c.trials = 100;
    c.sweep_db = {0.0};
    const RunReport r = run_experiment(c);
    CHECK(r.trials_failed == 0);
    CHECK(r.table.at(0, "agreements") >= 99.0);
}

TEST_CASE("cli exit codes") {
    const fs::path dir = scratch("cli");
    ExperimentConfig c;
    c.trials = 2;
    c.sweep_db = {20.0};
    c.output_dir = dir / "out";
    {
        std::ofstream(dir / "ok.yaml") << to_yaml(c);
        std::ofstream(dir / "bad.yaml") << "grid:\n  wrong: 1\n";
    }
    CHECK(run_cli("run --config " + (dir / "ok.yaml").string()) == 0);
    CHECK(fs::exists(dir / "out" / "results.csv"));
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(run_cli("run --config " + (dir / "ok.yaml").string() + " --mode oracle-check --trials 3 --seed 4 --no-ipi --output " +
                  (dir / "alt").string()) == 0);
    CHECK(fs::exists(dir / "alt" / "results.csv"));
    CHECK(run_cli("run --config " + (dir / "bad.yaml").string()) != 0);
    CHECK(run_cli("run --config " + (dir / "missing.yaml").string()) != 0);
    CHECK(run_cli("run --config " + (dir / "ok.yaml").string() + " --mode bogus") != 0);
    CHECK(run_cli("print-default-config") == 0);
}
