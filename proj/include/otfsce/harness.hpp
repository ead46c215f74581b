// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otfsce/channel.hpp"
#include "otfsce/estimator.hpp"
#include "otfsce/transceiver.hpp"

namespace otfsce {

enum class Mode { kNmse, kParamMse, kSer, kOracleCheck };

std::string to_string(Mode mode);
/// Throws ConfigError on an unknown name.
Mode parse_mode(const std::string& name);

struct GridConfig {
    std::size_t M = 64;
    std::size_t N = 32;
    double delta_f_hz = 30e3;
    double fc_hz = 5.1e9;

    DdGrid make() const { return DdGrid(M, N, delta_f_hz, fc_hz); }
};

struct SerConfig {
    std::size_t M = 16;
    std::size_t N = 8;
    int order = 4;
};

struct ExperimentConfig {
    GridConfig grid;
    ScenarioConfig scenario;
    PilotConfig pilot;
    SearchConfig search;
    SerConfig ser;
    std::vector<double> sweep_db{10.0, 20.0, 30.0, 40.0};
    int trials = 100;
    Mode mode = Mode::kNmse;
    bool ipi_elimination = true;
    bool noiseless = false;
    bool two_way_range = false;
    std::uint64_t seed = 1;
    int threads = 1;
    std::filesystem::path output_dir = "results";

    /// Grid used for trials: the reduced SER grid in SER mode.
    GridConfig effective_grid() const;
    void validate() const;
};

/// YAML text for a config; parse_config(to_yaml(c)) reproduces c.
std::string to_yaml(const ExperimentConfig& cfg);
/// Throws ConfigError with "line N:" context on malformed input.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical YAML form.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// splitmix64-mixed seed for (stream, index) under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

struct TrialOutcome {
    bool ok = false;
    std::string error;
    double nmse_linear = 0.0;
    double mse_delay_s2 = 0.0;
    double mse_doppler_hz2 = 0.0;
    double mse_delay_grid2 = 0.0;
    double mse_doppler_grid2 = 0.0;
    double mse_gain = 0.0;
    double misses = 0.0;
    double ser_estimated = 0.0;
    double ser_perfect = 0.0;
    bool oracle_agrees = false;
    std::size_t skipped_paths = 0;
};

/**
 * One Monte-Carlo trial at sweep point `point`.
 *
 * The scenario, noise and data streams are seeded from (seed, trial) only, so
 * every sweep point sees the same channels and the same unit noise draws
 * scaled to its own level.
 */
TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t point, std::size_t trial);

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    /// Column lookup by name; throws std::out_of_range.
    double at(std::size_t row, const std::string& column) const;
};

struct RunReport {
    ResultTable table;
    std::size_t trials_ok = 0;
    std::size_t trials_failed = 0;
};

using LogSink = std::function<void(const std::string&)>;

RunReport run_experiment(const ExperimentConfig& cfg, const LogSink& log = {});

inline constexpr const char* kVersion = "0.1.0";

std::string manifest_json(const ExperimentConfig& cfg, const RunReport& report);

/// Writes results.csv and manifest.json under cfg.output_dir.
void write_outputs(const ExperimentConfig& cfg, const RunReport& report);

/// Mean of linear NMSE values expressed in dB, stderr by the delta method.
struct DbSummary {
    double mean_db = 0.0;
    double stderr_db = 0.0;
};
DbSummary summarize_linear_as_db(const std::vector<double>& linear);

}  // namespace otfsce
