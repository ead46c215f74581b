// SPDX-License-Identifier: Apache-2.0

#include "otfsce/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include "otfsce/channel.hpp"
#include "otfsce/errors.hpp"

namespace otfsce {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kGainSingularTol = 1e-9;

std::atomic<std::size_t> g_bank_builds{0};

// Peak test over the cyclic 4-neighbourhood in the (magnitude, lower index)
// order. Exact magnitude ties, e.g. a fractional offset of exactly 0.5, go to
// the lower row-major index so that a two-cell plateau yields one peak.
bool is_peak(const std::vector<double>& mag, std::size_t N, std::size_t M, std::size_t k, std::size_t l) {
    const std::size_t idx = k * M + l;
    const double centre = mag[idx];
    if (!(centre > 0.0)) return false;
    const std::size_t neighbours[4] = {((k + N - 1) % N) * M + l, ((k + 1) % N) * M + l,
                                       k * M + (l + M - 1) % M, k * M + (l + 1) % M};
    for (std::size_t nb : neighbours) {
        if (nb == idx) continue;
        if (centre < mag[nb] || (centre == mag[nb] && nb < idx)) return false;
    }
    return true;
}

// Signed representative of a Doppler row: [0, N) -> [-N/2, N/2).
double signed_doppler(std::size_t k, std::size_t N) {
    return 2 * k >= N ? static_cast<double>(k) - static_cast<double>(N) : static_cast<double>(k);
}

}  // namespace

void SearchConfig::validate() const {
    if (!(step > 0.0) || !(step <= half_width)) {
        throw ConfigError("search: require 0 < step <= half_width");
    }
    if (max_paths < 1) throw ConfigError("search: max_paths must be >= 1");
}

std::size_t SearchConfig::half_count() const {
    return static_cast<std::size_t>(std::floor(half_width / step + 1e-9));
}

double SearchConfig::offset(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(half_count())) * step;
}

std::vector<TapLocation> extract_paths(const DdMatrix& h, int max_paths) {
    const std::size_t cells = h.grid().size();
    if (max_paths < 1 || static_cast<std::size_t>(max_paths) * 5 > cells) {
        throw DimensionError("extract_paths: max_paths must lie in [1, MN/5]");
    }
    std::vector<double> mag(cells);
    const auto data = h.data();
    for (std::size_t i = 0; i < cells; ++i) mag[i] = std::abs(data[i]);

    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mag[a] != mag[b] ? mag[a] > mag[b] : a < b;
    });

    const std::size_t M = h.cols();
    std::vector<TapLocation> taps;
    for (std::size_t idx : order) {
        if (taps.size() == static_cast<std::size_t>(max_paths)) break;
        const std::size_t k = idx / M;
        const std::size_t l = idx % M;
        if (is_peak(mag, h.rows(), M, k, l)) taps.push_back({k, l, mag[idx]});
    }
    return taps;
}

std::vector<double> doppler_template(double k_nu, const DdGrid& grid) {
    const ComplexVector r = doppler_response(k_nu, grid.N());
    std::vector<double> out(r.size());
    std::transform(r.begin(), r.end(), out.begin(), [](Complex z) { return std::abs(z); });
    return out;
}

std::vector<double> delay_template(double l_tau, const DdGrid& grid) {
    const ComplexVector r = delay_response(l_tau, grid.M());
    std::vector<double> out(r.size());
    std::transform(r.begin(), r.end(), out.begin(), [](Complex z) { return std::abs(z); });
    return out;
}

TemplateBank::TemplateBank(const DdGrid& grid, const SearchConfig& cfg) : grid_(grid), cfg_(cfg) {
    cfg_.validate();
    const std::size_t n = cfg_.candidate_count();
    const std::size_t N = grid.N();
    const std::size_t M = grid.M();
    offsets_.resize(n);
    doppler_.resize(n * N);
    delay_.resize(n * M);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = cfg_.offset(i);
        offsets_[i] = d;
        // Relative to the tap: Doppler template of k_p + d at row k_p + j.
        for (std::size_t j = 0; j < N; ++j) {
            doppler_[i * N + j] =
                std::abs(periodic_sum_kernel((d - static_cast<double>(j)) / static_cast<double>(N), N));
        }
        for (std::size_t j = 0; j < M; ++j) {
            delay_[i * M + j] =
                std::abs(periodic_sum_kernel((static_cast<double>(j) - d) / static_cast<double>(M), M));
        }
    }
    g_bank_builds.fetch_add(1, std::memory_order_relaxed);
}

std::size_t TemplateBank::builds() { return g_bank_builds.load(std::memory_order_relaxed); }

std::size_t argmax_with_tiebreak(const std::vector<double>& scores,
                                 const std::vector<double>& offsets) {
    const double best = *std::max_element(scores.begin(), scores.end());
    const double floor = best - kTieTolerance * std::abs(best);
    std::size_t pick = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < floor) continue;
        if (pick == scores.size()) {
            pick = i;
            continue;
        }
        const double a = std::abs(offsets[i]);
        const double b = std::abs(offsets[pick]);
        if (a < b || (a == b && offsets[i] < offsets[pick])) pick = i;
    }
    return pick;
}

DelayDopplerEstimate estimate_delay_doppler(const DdMatrix& h, const TapLocation& tap,
                                            const TemplateBank& bank) {
    const DdGrid& grid = h.grid();
    if (!(grid == bank.grid())) throw DimensionError("estimate_delay_doppler: grid mismatch");
    if (tap.k >= grid.N() || tap.l >= grid.M()) {
        throw DimensionError("estimate_delay_doppler: tap outside grid");
    }
    const std::size_t N = grid.N();
    const std::size_t M = grid.M();

    // Slices rotated so that index 0 is the tap.
    std::vector<double> doppler_slice(N);
    for (std::size_t j = 0; j < N; ++j) doppler_slice[j] = std::abs(h((tap.k + j) % N, tap.l));
    std::vector<double> delay_slice(M);
    for (std::size_t j = 0; j < M; ++j) delay_slice[j] = std::abs(h(tap.k, (tap.l + j) % M));

    const std::size_t n = bank.candidate_count();
    std::vector<double> offsets(n);
    std::vector<double> doppler_scores(n);
    std::vector<double> delay_scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        offsets[i] = bank.offset(i);
        const double* dt = bank.doppler_row(i);
        const double* lt = bank.delay_row(i);
        doppler_scores[i] = std::inner_product(doppler_slice.begin(), doppler_slice.end(), dt, 0.0);
        delay_scores[i] = std::inner_product(delay_slice.begin(), delay_slice.end(), lt, 0.0);
    }
    const double dk = offsets[argmax_with_tiebreak(doppler_scores, offsets)];
    const double dl = offsets[argmax_with_tiebreak(delay_scores, offsets)];
    return {static_cast<double>(tap.l) + dl, signed_doppler(tap.k, N) + dk};
}

DelayDopplerEstimate estimate_delay_doppler(const DdMatrix& h, const TapLocation& tap,
                                            const SearchConfig& cfg) {
    return estimate_delay_doppler(h, tap, TemplateBank(h.grid(), cfg));
}

Complex estimate_gain(const DdMatrix& h, const TapLocation& tap, double l_tau_hat,
                      double k_nu_hat) {
    const DdGrid& grid = h.grid();
    const auto N = static_cast<double>(grid.N());
    const auto M = static_cast<double>(grid.M());
    const Complex doppler_sum =
        periodic_sum_kernel((k_nu_hat - static_cast<double>(tap.k)) / N, grid.N());
    const Complex delay_sum =
        periodic_sum_kernel((static_cast<double>(tap.l) - l_tau_hat) / M, grid.M());
    const Complex denom = doppler_sum * delay_sum * path_phase(k_nu_hat, l_tau_hat, grid);
    if (std::abs(denom) < kGainSingularTol) {
        throw GainSingularError("estimate_gain: model response vanishes at tap (" +
                                std::to_string(tap.k) + ", " + std::to_string(tap.l) + ")");
    }
    return static_cast<double>(grid.size()) * h(tap.k, tap.l) / denom;
}

double leakage_score(const DdMatrix& h, const TapLocation& tap) {
    const double peak = std::abs(h(tap.k, tap.l));
    if (peak == 0.0) {
        throw LeakageUndefinedError("leakage_score: zero magnitude at tap");
    }
    const long k = static_cast<long>(tap.k);
    const long l = static_cast<long>(tap.l);
    const double neighbours = std::abs(h.at_wrapped(k - 1, l)) + std::abs(h.at_wrapped(k + 1, l)) +
                              std::abs(h.at_wrapped(k, l - 1)) + std::abs(h.at_wrapped(k, l + 1));
    return neighbours / peak;
}

DdMatrix reconstruct_path_channel(const PathEstimate& est, const DdGrid& grid) {
    const PathParams p = est.params();
    return generate_dd_channel(std::span<const PathParams>(&p, 1), grid);
}

SequentialEstimator::SequentialEstimator(const DdGrid& grid, const SearchConfig& cfg)
    : cfg_(cfg), bank_(grid, cfg) {}

SequentialResult SequentialEstimator::estimate(const DdMatrix& h,
                                               const SequentialOptions& opts) const {
    const DdGrid& grid = h.grid();
    if (!(grid == bank_.grid())) throw DimensionError("SequentialEstimator: grid mismatch");

    std::vector<PathEstimate> ranked;
    for (const TapLocation& tap : extract_paths(h, cfg_.max_paths)) {
        ranked.push_back({tap, 0.0, 0.0, {}, leakage_score(h, tap)});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const PathEstimate& a, const PathEstimate& b) {
        return a.leakage > b.leakage;
    });

    SequentialResult result;
    DdMatrix working = h;
    for (PathEstimate& est : ranked) {
        const DdMatrix& source = opts.ipi_elimination ? working : h;
        const DelayDopplerEstimate dd = estimate_delay_doppler(source, est.tap, bank_);
        est.l_tau_hat = dd.l_tau;
        est.k_nu_hat = dd.k_nu;
        try {
            est.alpha_hat = estimate_gain(source, est.tap, dd.l_tau, dd.k_nu);
        } catch (const GainSingularError& e) {
            ++result.skipped;
            if (opts.log) opts.log(e.what());
            continue;
        }
        if (opts.ipi_elimination) working -= reconstruct_path_channel(est, grid);
        result.paths.push_back(est);
    }
    return result;
}

SequentialResult estimate_sequential(const DdMatrix& h, const SearchConfig& cfg,
                                     const SequentialOptions& opts) {
    return SequentialEstimator(h.grid(), cfg).estimate(h, opts);
}

DdMatrix reconstruct_channel(const std::vector<PathEstimate>& paths, const DdGrid& grid) {
    std::vector<PathParams> params;
    params.reserve(paths.size());
    for (const auto& p : paths) params.push_back(p.params());
    return generate_dd_channel(params, grid);
}

}  // namespace otfsce
