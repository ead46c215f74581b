// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "otfsce/dd_grid.hpp"

namespace otfsce {

using Rng = std::mt19937_64;

/// Random multipath scenario: LoS at zero delay, a second path a fixed gap
/// behind it, remaining paths uniform over a delay window.
struct ScenarioConfig {
    int num_paths = 5;
    double rice_factor_db = 15.0;
    double fixed_delay_gap_s = 0.2e-6;
    std::pair<double, double> delay_range_s{0.867e-6, 7e-6};
    double max_doppler_hz = 1700.0;

    void validate(const DdGrid& grid) const;
};

struct NoiseConfig {
    double sigma2 = 1.0;

    /// sigma2 = E_p / PSNR, with PSNR given in dB.
    static NoiseConfig from_psnr_db(double psnr_db, double pilot_energy);
};

/**
 * Sum_{n=0}^{L-1} exp(j 2 pi n x) in closed form.
 *
 * Integer x returns L. When L*x is an integer but x is not, every term pairs up
 * over a full period and the result is exactly zero.
 */
Complex periodic_sum_kernel(double x, std::size_t L);

/// Doppler response sum_n exp(-j 2 pi n (k - k_nu)/N) for k = 0..N-1.
ComplexVector doppler_response(double k_nu, std::size_t N);
/// Delay response sum_m exp(j 2 pi m (l - l_tau)/M) for l = 0..M-1.
ComplexVector delay_response(double l_tau, std::size_t M);

/// Cross phase exp(j 2 pi k_nu l_tau / (MN)) that multiplies each path.
Complex path_phase(double k_nu, double l_tau, const DdGrid& grid);

/**
 * Effective delay-Doppler channel of a path set under bi-orthogonal pulses.
 *
 * H[k,l] = sum_p alpha_p e^{j2pi k_nu l_tau/(MN)} / (MN) * h_nu(k) * h_tau(l).
 * Paths are not range-checked: estimates may sit just outside the canonical
 * window and still synthesize consistently.
 */
DdMatrix generate_dd_channel(std::span<const PathParams> paths, const DdGrid& grid);

/// 2D circular convolution of two grids via FFTW.
DdMatrix circular_convolve(const DdMatrix& a, const DdMatrix& b);

/// Y = H (*) X with H = generate_dd_channel(paths).
DdMatrix apply_channel(const DdMatrix& x, std::span<const PathParams> paths, const DdGrid& grid);

/// Adds i.i.d. CN(0, sigma2) to every entry.
DdMatrix add_awgn(const DdMatrix& a, const NoiseConfig& noise, Rng& rng);

std::vector<PathParams> sample_scenario(const ScenarioConfig& cfg, const DdGrid& grid, Rng& rng);

}  // namespace otfsce
