// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "otfsce/dd_grid.hpp"
#include "otfsce/estimator.hpp"

namespace otfsce {

/// Stand-in for -inf when the estimate is exact.
inline constexpr double kNmseFloorDb = -320.0;

/// 10 log10(||H_hat - H||^2 / ||H||^2). Throws std::domain_error on a zero reference.
double nmse_db(const DdMatrix& h_hat, const DdMatrix& h);
/// Linear-domain ratio behind nmse_db.
double nmse_linear(const DdMatrix& h_hat, const DdMatrix& h);

/// Largest per-axis offset, in grid cells, at which an estimate can explain a truth.
inline constexpr double kAssociationGateCells = 1.0;

struct MatchedPair {
    std::size_t truth = 0;
    std::size_t estimate = 0;
};

struct TrialScore {
    std::optional<double> nmse_db;
    std::optional<double> mse_delay_s2;
    std::optional<double> mse_doppler_hz2;
    std::optional<double> mse_delay_grid2;
    std::optional<double> mse_doppler_grid2;
    std::optional<double> mse_gain;
    std::optional<double> ser;
    std::vector<MatchedPair> matched_pairs;
    std::size_t misses = 0;    // truths without an estimate
    std::size_t spurious = 0;  // estimates without a truth
};

/**
 * Greedy nearest-neighbour pairing of estimates with true paths.
 *
 * Distance is sqrt((dl/M)^2 + (dk/N)^2) with cyclic differences. Pairs are
 * committed closest first. A pair is eligible only when both |dl| and |dk| are
 * within `gate_cells` grid cells; truths left over count as misses. The gain error is taken after re-expressing the
 * estimate in the delay/Doppler period nearest the truth, so a wrap across
 * the grid edge does not show up as a phase error.
 */
TrialScore associate_and_score(std::span<const PathParams> truth,
                               std::span<const PathEstimate> estimates, const DdGrid& grid,
                               double gate_cells = kAssociationGateCells);

/**
 * Exhaustive search over the full (delay offset, Doppler offset) candidate
 * product, maximising the correlation of the 2D magnitude template
 * |h_nu(k)| |h_tau(l)| with |H|. Templates are evaluated by direct summation.
 * Ties resolve to the smallest |dk| + |dl|, then smaller dk, then smaller dl.
 */
DelayDopplerEstimate joint_grid_oracle(const DdMatrix& h, const TapLocation& tap,
                                       const SearchConfig& cfg);

/// Fraction of mismatched positions. Throws DimensionError on length mismatch.
double ser(std::span<const int> detected, std::span<const int> transmitted);

}  // namespace otfsce
