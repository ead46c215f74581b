// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "otfsce/dd_grid.hpp"

namespace otfsce {

/// Integer grid position of a candidate path.
struct TapLocation {
    std::size_t k = 0;  // Doppler row
    std::size_t l = 0;  // delay column
    double peak_magnitude = 0.0;

    friend bool operator==(const TapLocation&, const TapLocation&) = default;
};

/**
 * Fractional search window around each tap.
 *
 * Candidates are tap + i*step for integer i with |i*step| <= half_width, so the
 * tap itself is always an exact candidate and both endpoints are included.
 */
struct SearchConfig {
    double half_width = 1.0;
    double step = 0.01;
    int max_paths = 5;

    void validate() const;
    /// Number of candidates on each side of the tap.
    std::size_t half_count() const;
    std::size_t candidate_count() const { return 2 * half_count() + 1; }
    /// Offset of candidate i from the tap.
    double offset(std::size_t i) const;
};

struct PathEstimate {
    TapLocation tap;
    double l_tau_hat = 0.0;  // l + delay offset, not wrapped
    double k_nu_hat = 0.0;   // signed Doppler index
    Complex alpha_hat;
    double leakage = 0.0;

    PathParams params() const { return {l_tau_hat, k_nu_hat, alpha_hat}; }
};

/**
 * Strongest local maxima of |H| over the cyclic 4-neighbourhood.
 *
 * Cells are tried in order of decreasing magnitude; a cell that does not beat
 * all four neighbours is replaced by the next-strongest untried cell. An exact
 * tie with a neighbour counts for the lower row-major index, so a two-cell
 * plateau gives a single tap. Zero cells are never taps. Returns
 * fewer than max_paths taps when the grid runs out of peaks. Throws
 * DimensionError when max_paths exceeds MN/5.
 */
std::vector<TapLocation> extract_paths(const DdMatrix& h, int max_paths);

/// |sum_n exp(j 2 pi n (k_nu - k)/N)| for k = 0..N-1.
std::vector<double> doppler_template(double k_nu, const DdGrid& grid);
/// |sum_m exp(j 2 pi m (l - l_tau)/M)| for l = 0..M-1.
std::vector<double> delay_template(double l_tau, const DdGrid& grid);

/**
 * Magnitude templates for every search offset, indexed relative to the tap.
 *
 * Row i of the Doppler table holds doppler_template(k_p + offset(i)) rotated so
 * that column 0 is row k_p; the delay table is analogous. Both depend only on
 * the grid and the search configuration, so they are built once and reused
 * for every path.
 */
class TemplateBank {
public:
    TemplateBank(const DdGrid& grid, const SearchConfig& cfg);

    const DdGrid& grid() const { return grid_; }
    const SearchConfig& config() const { return cfg_; }
    std::size_t candidate_count() const { return offsets_.size(); }
    double offset(std::size_t i) const { return offsets_[i]; }

    const double* doppler_row(std::size_t i) const { return &doppler_[i * grid_.N()]; }
    const double* delay_row(std::size_t i) const { return &delay_[i * grid_.M()]; }

    /// Total number of banks constructed in this process.
    static std::size_t builds();

private:
    DdGrid grid_;
    SearchConfig cfg_;
    std::vector<double> offsets_;
    std::vector<double> doppler_;
    std::vector<double> delay_;
};

/**
 * Index of the best candidate score.
 *
 * Scores within a relative 1e-12 of the maximum tie; ties resolve to the
 * offset nearest zero, then to the smaller offset.
 */
std::size_t argmax_with_tiebreak(const std::vector<double>& scores,
                                 const std::vector<double>& offsets);

struct DelayDopplerEstimate {
    double l_tau = 0.0;
    double k_nu = 0.0;
};

/// Separable magnitude-correlation search on the row and column through `tap`.
DelayDopplerEstimate estimate_delay_doppler(const DdMatrix& h, const TapLocation& tap,
                                            const TemplateBank& bank);
DelayDopplerEstimate estimate_delay_doppler(const DdMatrix& h, const TapLocation& tap,
                                            const SearchConfig& cfg);

/// Inverts the single-path model at the tap cell. Throws GainSingularError when
/// the model response there is below 1e-9 in magnitude.
Complex estimate_gain(const DdMatrix& h, const TapLocation& tap, double l_tau_hat,
                      double k_nu_hat);

/// Sum of the four neighbour magnitudes over the tap magnitude.
double leakage_score(const DdMatrix& h, const TapLocation& tap);

DdMatrix reconstruct_path_channel(const PathEstimate& est, const DdGrid& grid);

struct SequentialOptions {
    bool ipi_elimination = true;
    /// Receives a message for every path skipped on a singular gain.
    std::function<void(const std::string&)> log;
};

struct SequentialResult {
    std::vector<PathEstimate> paths;  // processing order (highest leakage first)
    std::size_t skipped = 0;
};

/**
 * Leakage-ordered path estimation with optional interference elimination.
 *
 * Taps are extracted and ranked once on the input channel. Each path is then
 * estimated on the working channel and, when elimination is on, its
 * reconstruction is subtracted before the next path is processed.
 */
class SequentialEstimator {
public:
    SequentialEstimator(const DdGrid& grid, const SearchConfig& cfg);

    const TemplateBank& bank() const { return bank_; }

    SequentialResult estimate(const DdMatrix& h, const SequentialOptions& opts = {}) const;

private:
    SearchConfig cfg_;
    TemplateBank bank_;
};

SequentialResult estimate_sequential(const DdMatrix& h, const SearchConfig& cfg,
                                     const SequentialOptions& opts = {});

/// Sum of reconstructed single-path channels.
DdMatrix reconstruct_channel(const std::vector<PathEstimate>& paths, const DdGrid& grid);

}  // namespace otfsce
