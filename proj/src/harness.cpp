// SPDX-License-Identifier: Apache-2.0

#include "otfsce/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "otfsce/errors.hpp"
#include "otfsce/metrics.hpp"

namespace otfsce {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::kNmse: return "nmse";
        case Mode::kParamMse: return "param-mse";
        case Mode::kSer: return "ser";
        case Mode::kOracleCheck: return "oracle-check";
    }
    return "unknown";
}

Mode parse_mode(const std::string& name) {
    if (name == "nmse") return Mode::kNmse;
    if (name == "param-mse") return Mode::kParamMse;
    if (name == "ser") return Mode::kSer;
    if (name == "oracle-check") return Mode::kOracleCheck;
    throw ConfigError("unknown mode '" + name + "' (expected nmse, param-mse, ser, oracle-check)");
}

GridConfig ExperimentConfig::effective_grid() const {
    if (mode != Mode::kSer) return grid;
    GridConfig g = grid;
    g.M = ser.M;
    g.N = ser.N;
    return g;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (sweep_db.empty()) throw ConfigError("sweep_db must not be empty");
    for (double v : sweep_db) {
        if (!std::isfinite(v)) throw ConfigError("sweep_db entries must be finite");
    }
    DdGrid g = [&] {
        try {
            return effective_grid().make();
        } catch (const DimensionError& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }();
    scenario.validate(g);
    pilot.validate(g);
    search.validate();
    if (static_cast<std::size_t>(search.max_paths) * 5 > g.size()) {
        throw ConfigError("search.max_paths must not exceed M*N/5");
    }
    if (mode == Mode::kSer) {
        Constellation check(ser.order);
        if (g.size() > kMaxDenseSize) throw ConfigError("ser grid too large for dense detection");
    }
    if (mode == Mode::kOracleCheck && search.candidate_count() > 201) {
        throw ConfigError("oracle-check needs at most 201 candidates per axis");
    }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    ExperimentConfig canonical = cfg;
    canonical.threads = 1;
    canonical.output_dir.clear();
    const std::string text = to_yaml(canonical);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ stream) ^ index);
}

namespace {

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg)
        : cfg_(cfg), grid_((cfg.validate(), cfg.effective_grid().make())), estimator_(grid_, cfg.search) {}

    TrialOutcome run_trial(std::size_t point, std::size_t trial) const {
        TrialOutcome out;
        try {
            switch (cfg_.mode) {
                case Mode::kNmse:
                case Mode::kParamMse: channel_trial(point, trial, out); break;
                case Mode::kSer: ser_trial(point, trial, out); break;
                case Mode::kOracleCheck: oracle_trial(point, trial, out); break;
            }
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
        return out;
    }

private:
    struct Streams {
        Rng scenario;
        Rng noise;
        Rng data;
    };

    Streams streams(std::size_t trial) const {
        return {Rng(derive_seed(cfg_.seed, 0, trial)), Rng(derive_seed(cfg_.seed, 1, trial)),
                Rng(derive_seed(cfg_.seed, 2, trial))};
    }

    // Pilot through the channel, plus noise at the sweep point, then recovery.
    DdMatrix estimate_input(const std::vector<PathParams>& paths, double psnr_db, Rng& noise) const {
        DdMatrix y = apply_channel(make_pilot_frame(cfg_.pilot, grid_), paths, grid_);
        if (!cfg_.noiseless) {
            y = add_awgn(y, NoiseConfig::from_psnr_db(psnr_db, cfg_.pilot.energy), noise);
        }
        return recover_effective_channel(y, cfg_.pilot);
    }

    SequentialResult estimate(const DdMatrix& h_hat) const {
        SequentialOptions opts;
        opts.ipi_elimination = cfg_.ipi_elimination;
        return estimator_.estimate(h_hat, opts);
    }

    void channel_trial(std::size_t point, std::size_t trial, TrialOutcome& out) const {
        Streams s = streams(trial);
        const auto paths = sample_scenario(cfg_.scenario, grid_, s.scenario);
        const DdMatrix h = generate_dd_channel(paths, grid_);
        const DdMatrix h_hat = estimate_input(paths, cfg_.sweep_db[point], s.noise);
        const SequentialResult est = estimate(h_hat);
        out.skipped_paths = est.skipped;
        out.nmse_linear = nmse_linear(reconstruct_channel(est.paths, grid_), h);
        if (cfg_.mode != Mode::kParamMse) return;

        const TrialScore score = associate_and_score(paths, est.paths, grid_);
        if (score.matched_pairs.empty()) throw std::runtime_error("no path estimates to score");
        out.mse_delay_s2 = *score.mse_delay_s2;
        out.mse_doppler_hz2 = *score.mse_doppler_hz2;
        out.mse_delay_grid2 = *score.mse_delay_grid2;
        out.mse_doppler_grid2 = *score.mse_doppler_grid2;
        out.mse_gain = *score.mse_gain;
        out.misses = static_cast<double>(score.misses);
    }

    void ser_trial(std::size_t point, std::size_t trial, TrialOutcome& out) const {
        Streams s = streams(trial);
        const double snr_db = cfg_.sweep_db[point];
        const auto paths = sample_scenario(cfg_.scenario, grid_, s.scenario);
        const DdMatrix h = generate_dd_channel(paths, grid_);
        const DdMatrix h_hat = estimate_input(paths, snr_db, s.noise);
        const SequentialResult est = estimate(h_hat);
        out.skipped_paths = est.skipped;
        const DdMatrix h_rec = reconstruct_channel(est.paths, grid_);
        out.nmse_linear = nmse_linear(h_rec, h);

        const DataFrame frame = make_data_frame(cfg_.ser.order, s.data, grid_);
        DdMatrix y = circular_convolve(h, frame.symbols);
        const double sigma2 = std::pow(10.0, -snr_db / 10.0);
        if (!cfg_.noiseless) y = add_awgn(y, NoiseConfig{sigma2}, s.noise);
        const ComplexVector yv = vec(y);
        const DenseVector ydense = Eigen::Map<const DenseVector>(yv.data(), static_cast<Eigen::Index>(yv.size()));
        const std::vector<int> sent = indices_in_vec_order(frame);
        const double reg = std::max(sigma2, 1e-12);

        const auto perfect = lmmse_detect(ydense, build_effective_matrix(h), reg, cfg_.ser.order);
        const auto estimated = lmmse_detect(ydense, build_effective_matrix(h_rec), reg, cfg_.ser.order);
        out.ser_perfect = ser(perfect, sent);
        out.ser_estimated = ser(estimated, sent);
    }

    void oracle_trial(std::size_t point, std::size_t trial, TrialOutcome& out) const {
        Streams s = streams(trial);
        std::uniform_real_distribution<double> delay(0.0, static_cast<double>(grid_.M()));
        const double half_n = static_cast<double>(grid_.N()) / 2.0;
        std::uniform_real_distribution<double> doppler(-half_n, half_n);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
        PathParams p;
        p.l_tau = delay(s.scenario);
        p.k_nu = doppler(s.scenario);
        p.alpha = std::polar(1.0, phase(s.scenario));
        const std::vector<PathParams> paths{p};

        const DdMatrix h_hat = estimate_input(paths, cfg_.sweep_db[point], s.noise);
        const auto taps = extract_paths(h_hat, 1);
        if (taps.empty()) throw std::runtime_error("no peak found");
        const DelayDopplerEstimate sep = estimate_delay_doppler(h_hat, taps[0], estimator_.bank());
        const DelayDopplerEstimate joint = joint_grid_oracle(h_hat, taps[0], cfg_.search);
        const double tol = cfg_.search.step + 1e-9;
        out.oracle_agrees = std::abs(sep.l_tau - joint.l_tau) <= tol && std::abs(sep.k_nu - joint.k_nu) <= tol;
    }

    ExperimentConfig cfg_;
    DdGrid grid_;
    SequentialEstimator estimator_;
};

struct Stat {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Stat stat(const std::vector<double>& v) {
    Stat s;
    if (v.empty()) return {std::nan(""), std::nan("")};
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return s;
}

}  // namespace

DbSummary summarize_linear_as_db(const std::vector<double>& linear) {
    const Stat s = stat(linear);
    if (!(s.mean > 0.0)) return {kNmseFloorDb, 0.0};
    return {std::max(10.0 * std::log10(s.mean), kNmseFloorDb), 10.0 / std::log(10.0) * s.stderr_ / s.mean};
}

TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t point, std::size_t trial) {
    return Runner(cfg).run_trial(point, trial);
}

std::string ResultTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i];
    }
    out += '\n';
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::snprintf(buf, sizeof buf, "%.12g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

double ResultTable::at(std::size_t row, const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) throw std::out_of_range("no column '" + column + "'");
    return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

RunReport run_experiment(const ExperimentConfig& cfg, const LogSink& log) {
    const Runner runner(cfg);
    const std::size_t points = cfg.sweep_db.size();
    const auto trials = static_cast<std::size_t>(cfg.trials);
    const std::size_t jobs = points * trials;
    std::vector<TrialOutcome> outcomes(jobs);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
            outcomes[j] = runner.run_trial(j / trials, j % trials);
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), jobs);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    RunReport report;
    ResultTable& table = report.table;
    switch (cfg.mode) {
        case Mode::kNmse:
            table.columns = {"sweep_db", "metric_mean", "metric_stderr", "trials_ok", "trials_failed"};
            break;
        case Mode::kParamMse:
            table.columns = {"sweep_db",
                             "delay_mse_s2_mean", "delay_mse_s2_stderr",
                             "doppler_mse_hz2_mean", "doppler_mse_hz2_stderr",
                             "delay_mse_grid2_mean", "delay_mse_grid2_stderr",
                             "doppler_mse_grid2_mean", "doppler_mse_grid2_stderr",
                             "range_mse_m2_mean", "velocity_mse_mps2_mean",
                             "gain_mse_mean", "gain_mse_stderr",
                             "misses_mean", "trials_ok", "trials_failed"};
            break;
        case Mode::kSer:
            table.columns = {"sweep_db", "metric_mean", "metric_stderr", "perfect_csi_ser_mean",
                             "perfect_csi_ser_stderr", "trials_ok", "trials_failed"};
            break;
        case Mode::kOracleCheck:
            table.columns = {"sweep_db", "metric_mean", "metric_stderr", "agreements", "trials_ok",
                             "trials_failed"};
            break;
    }

    const DdGrid grid = cfg.effective_grid().make();
    const double range_scale = kSpeedOfLight / (cfg.two_way_range ? 2.0 : 1.0);
    const double velocity_scale = range_scale / grid.fc();

    for (std::size_t p = 0; p < points; ++p) {
        std::vector<const TrialOutcome*> ok;
        double failed = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const TrialOutcome& o = outcomes[p * trials + t];
            if (o.ok) {
                ok.push_back(&o);
            } else {
                failed += 1.0;
                if (log) {
                    log("sweep " + std::to_string(cfg.sweep_db[p]) + " dB, trial " + std::to_string(t) +
                        " failed: " + o.error);
                }
            }
            if (o.ok && o.skipped_paths && log) {
                log("sweep " + std::to_string(cfg.sweep_db[p]) + " dB, trial " + std::to_string(t) +
                    ": skipped " + std::to_string(o.skipped_paths) + " path(s) with singular gain");
            }
        }
        report.trials_ok += ok.size();
        report.trials_failed += static_cast<std::size_t>(failed);
        auto collect = [&](auto field) {
            std::vector<double> v;
            v.reserve(ok.size());
            for (const TrialOutcome* o : ok) v.push_back(field(*o));
            return v;
        };
        const double n_ok = static_cast<double>(ok.size());
        std::vector<double> row{cfg.sweep_db[p]};
        switch (cfg.mode) {
            case Mode::kNmse: {
                const DbSummary s = summarize_linear_as_db(collect([](const TrialOutcome& o) { return o.nmse_linear; }));
                row.insert(row.end(), {s.mean_db, s.stderr_db, n_ok, failed});
                break;
            }
            case Mode::kParamMse: {
                const Stat ds = stat(collect([](const TrialOutcome& o) { return o.mse_delay_s2; }));
                const Stat dh = stat(collect([](const TrialOutcome& o) { return o.mse_doppler_hz2; }));
                const Stat dg = stat(collect([](const TrialOutcome& o) { return o.mse_delay_grid2; }));
                const Stat kg = stat(collect([](const TrialOutcome& o) { return o.mse_doppler_grid2; }));
                const Stat ga = stat(collect([](const TrialOutcome& o) { return o.mse_gain; }));
                const Stat mi = stat(collect([](const TrialOutcome& o) { return o.misses; }));
                row.insert(row.end(), {ds.mean, ds.stderr_, dh.mean, dh.stderr_, dg.mean, dg.stderr_, kg.mean,
                                       kg.stderr_, ds.mean * range_scale * range_scale,
                                       dh.mean * velocity_scale * velocity_scale, ga.mean, ga.stderr_, mi.mean,
                                       n_ok, failed});
                break;
            }
            case Mode::kSer: {
                const Stat se = stat(collect([](const TrialOutcome& o) { return o.ser_estimated; }));
                const Stat sp = stat(collect([](const TrialOutcome& o) { return o.ser_perfect; }));
                row.insert(row.end(), {se.mean, se.stderr_, sp.mean, sp.stderr_, n_ok, failed});
                break;
            }
            case Mode::kOracleCheck: {
                const auto agree = collect([](const TrialOutcome& o) { return o.oracle_agrees ? 1.0 : 0.0; });
                const Stat a = stat(agree);
                row.insert(row.end(), {a.mean, a.stderr_, std::accumulate(agree.begin(), agree.end(), 0.0), n_ok,
                                       failed});
                break;
            }
        }
        table.rows.push_back(std::move(row));
    }
    return report;
}

std::string manifest_json(const ExperimentConfig& cfg, const RunReport& report) {
    ExperimentConfig canonical = cfg;
    canonical.threads = 1;
    canonical.output_dir.clear();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    nlohmann::ordered_json j;
    j["tool"] = "otfsce";
    j["version"] = kVersion;
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    j["config_hash"] = hash;
    j["trials_ok"] = report.trials_ok;
    j["trials_failed"] = report.trials_failed;
    j["columns"] = report.table.columns;
    j["config_yaml"] = to_yaml(canonical);
    return j.dump(2) + "\n";
}

void write_outputs(const ExperimentConfig& cfg, const RunReport& report) {
    std::filesystem::create_directories(cfg.output_dir);
    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << text;
    };
    write(cfg.output_dir / "results.csv", report.table.to_csv());
    write(cfg.output_dir / "manifest.json", manifest_json(cfg, report));
}

}  // namespace otfsce
