// SPDX-License-Identifier: Apache-2.0

#include "otfsce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "otfsce/errors.hpp"

namespace otfsce {

double nmse_linear(const DdMatrix& h_hat, const DdMatrix& h) {
    const double ref = h.energy();
    if (!(ref > 0.0)) throw std::domain_error("nmse: reference channel has zero energy");
    return (h_hat - h).energy() / ref;
}

double nmse_db(const DdMatrix& h_hat, const DdMatrix& h) {
    const double ratio = nmse_linear(h_hat, h);
    if (ratio <= 0.0) return kNmseFloorDb;
    return std::max(10.0 * std::log10(ratio), kNmseFloorDb);
}

TrialScore associate_and_score(std::span<const PathParams> truth,
                               std::span<const PathEstimate> estimates, const DdGrid& grid,
                               double gate_cells) {
    const double M = static_cast<double>(grid.M());
    const double N = static_cast<double>(grid.N());

    // Estimate i rebased to the period nearest truth t.
    auto rebased = [&](std::size_t t, std::size_t i) {
        const PathParams e = estimates[i].params();
        const auto dp = static_cast<long>(std::round((truth[t].l_tau - e.l_tau) / M));
        const auto up = static_cast<long>(std::round((truth[t].k_nu - e.k_nu) / N));
        return shift_representation(e, grid, dp, up);
    };

    struct Candidate {
        double distance;
        std::size_t truth;
        std::size_t estimate;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(truth.size() * estimates.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
        for (std::size_t i = 0; i < estimates.size(); ++i) {
            const PathParams e = rebased(t, i);
            const double dl = e.l_tau - truth[t].l_tau;
            const double dk = e.k_nu - truth[t].k_nu;
            if (std::abs(dl) > gate_cells || std::abs(dk) > gate_cells) continue;
            candidates.push_back({std::hypot(dl / M, dk / N), t, i});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.distance, a.truth, a.estimate) < std::tie(b.distance, b.truth, b.estimate);
    });

    TrialScore score;
    std::vector<bool> truth_used(truth.size(), false);
    std::vector<bool> est_used(estimates.size(), false);
    for (const Candidate& c : candidates) {
        if (truth_used[c.truth] || est_used[c.estimate]) continue;
        truth_used[c.truth] = true;
        est_used[c.estimate] = true;
        score.matched_pairs.push_back({c.truth, c.estimate});
    }
    std::sort(score.matched_pairs.begin(), score.matched_pairs.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.truth < b.truth; });
    score.misses = truth.size() - score.matched_pairs.size();
    score.spurious = estimates.size() - score.matched_pairs.size();
    if (score.matched_pairs.empty()) return score;

    double sum_l = 0.0;
    double sum_k = 0.0;
    double sum_g = 0.0;
    for (const MatchedPair& m : score.matched_pairs) {
        const PathParams e = rebased(m.truth, m.estimate);
        sum_l += std::pow(e.l_tau - truth[m.truth].l_tau, 2);
        sum_k += std::pow(e.k_nu - truth[m.truth].k_nu, 2);
        sum_g += std::norm(e.alpha - truth[m.truth].alpha);
    }
    const double count = static_cast<double>(score.matched_pairs.size());
    score.mse_delay_grid2 = sum_l / count;
    score.mse_doppler_grid2 = sum_k / count;
    score.mse_delay_s2 = *score.mse_delay_grid2 * std::pow(grid.delay_resolution(), 2);
    score.mse_doppler_hz2 = *score.mse_doppler_grid2 * std::pow(grid.doppler_resolution(), 2);
    score.mse_gain = sum_g / count;
    return score;
}

namespace {

// |sum_{n<L} exp(j 2 pi n x)| by explicit summation.
double direct_sum_magnitude(double x, std::size_t L) {
    Complex acc{};
    for (std::size_t n = 0; n < L; ++n) {
        acc += std::polar(1.0, 2.0 * kPi * static_cast<double>(n) * x);
    }
    return std::abs(acc);
}

}  // namespace

DelayDopplerEstimate joint_grid_oracle(const DdMatrix& h, const TapLocation& tap,
                                       const SearchConfig& cfg) {
    cfg.validate();
    const DdGrid& grid = h.grid();
    const std::size_t N = grid.N();
    const std::size_t M = grid.M();
    const std::size_t n = cfg.candidate_count();
    if (n > 201) throw DimensionError("joint_grid_oracle: candidate grid larger than 201 x 201");

    std::vector<double> offsets(n);
    for (std::size_t i = 0; i < n; ++i) offsets[i] = cfg.offset(i);

    const double k_base = 2 * tap.k >= N ? static_cast<double>(tap.k) - static_cast<double>(N)
                                         : static_cast<double>(tap.k);
    const double l_base = static_cast<double>(tap.l);

    // doppler_tpl[i][k], delay_tpl[s][l] over absolute grid indices.
    std::vector<std::vector<double>> doppler_tpl(n, std::vector<double>(N));
    std::vector<std::vector<double>> delay_tpl(n, std::vector<double>(M));
    for (std::size_t i = 0; i < n; ++i) {
        const double k_nu = k_base + offsets[i];
        const double l_tau = l_base + offsets[i];
        for (std::size_t k = 0; k < N; ++k) {
            doppler_tpl[i][k] =
                direct_sum_magnitude((k_nu - static_cast<double>(k)) / static_cast<double>(N), N);
        }
        for (std::size_t l = 0; l < M; ++l) {
            delay_tpl[i][l] =
                direct_sum_magnitude((static_cast<double>(l) - l_tau) / static_cast<double>(M), M);
        }
    }

    std::vector<double> mag(grid.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(h.data()[i]);

    double best = -1.0;
    std::vector<double> values;
    values.reserve(n * n);
    std::vector<double> projected(M);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(projected.begin(), projected.end(), 0.0);
        for (std::size_t k = 0; k < N; ++k) {
            const double w = doppler_tpl[i][k];
            for (std::size_t l = 0; l < M; ++l) projected[l] += w * mag[k * M + l];
        }
        for (std::size_t s = 0; s < n; ++s) {
            double j = 0.0;
            for (std::size_t l = 0; l < M; ++l) j += projected[l] * delay_tpl[s][l];
            values.push_back(j);
            best = std::max(best, j);
        }
    }

    const double floor = best - 1e-12 * std::abs(best);
    std::size_t pick_i = n;
    std::size_t pick_s = n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < n; ++s) {
            if (values[i * n + s] < floor) continue;
            if (pick_i == n) {
                pick_i = i;
                pick_s = s;
                continue;
            }
            const auto key = [&](std::size_t a, std::size_t b) {
                return std::make_tuple(std::abs(offsets[a]) + std::abs(offsets[b]), offsets[a],
                                       offsets[b]);
            };
            if (key(i, s) < key(pick_i, pick_s)) {
                pick_i = i;
                pick_s = s;
            }
        }
    }
    return {l_base + offsets[pick_s], k_base + offsets[pick_i]};
}

double ser(std::span<const int> detected, std::span<const int> transmitted) {
    if (detected.size() != transmitted.size()) {
        throw DimensionError("ser: sequence length mismatch");
    }
    if (detected.empty()) return 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < detected.size(); ++i) errors += detected[i] != transmitted[i];
    return static_cast<double>(errors) / static_cast<double>(detected.size());
}

}  // namespace otfsce
