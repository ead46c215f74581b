// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace otfsce {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299'792'458.0;

/**
 * Static OTFS frame geometry.
 *
 * M delay bins by N Doppler bins with subcarrier spacing delta_f. The symbol
 * duration T is always derived as 1/delta_f. The carrier frequency only enters
 * the Doppler-to-velocity conversion.
 */
class DdGrid {
public:
    DdGrid(std::size_t M, std::size_t N, double delta_f, double fc);

    std::size_t M() const { return M_; }
    std::size_t N() const { return N_; }
    std::size_t size() const { return M_ * N_; }
    double delta_f() const { return delta_f_; }
    double fc() const { return fc_; }
    double T() const { return 1.0 / delta_f_; }

    /// Seconds per delay bin (T/M).
    double delay_resolution() const { return T() / static_cast<double>(M_); }
    /// Hz per Doppler bin (delta_f/N).
    double doppler_resolution() const { return delta_f_ / static_cast<double>(N_); }

    friend bool operator==(const DdGrid&, const DdGrid&) = default;

private:
    std::size_t M_;
    std::size_t N_;
    double delta_f_;
    double fc_;
};

/**
 * One propagation path in grid units.
 *
 * l_tau is the fractional delay index, k_nu the signed fractional Doppler
 * index. Doppler keeps its physical sign and is only wrapped into [0, N) when a
 * grid cell is addressed.
 */
struct PathParams {
    double l_tau = 0.0;
    double k_nu = 0.0;
    Complex alpha{1.0, 0.0};

    /// Integer delay tap nearest to l_tau (unwrapped).
    double delay_tap() const;
    double doppler_tap() const;
    /// iota, in [-0.5, 0.5].
    double delay_fraction() const { return l_tau - delay_tap(); }
    /// kappa, in [-0.5, 0.5].
    double doppler_fraction() const { return k_nu - doppler_tap(); }

    /// True when 0 <= l_tau < M and -N/2 <= k_nu < N/2.
    bool in_canonical_range(const DdGrid& grid) const;
};

/// Throws DimensionError when `p` is outside the canonical range of `grid`.
void validate_path(const PathParams& p, const DdGrid& grid);

/**
 * Re-express a path with its delay shifted by `delay_periods`*M and its
 * Doppler by `doppler_periods`*N while leaving the synthesized channel
 * unchanged. The delay-Doppler cross phase is not periodic in either index, so
 * the gain absorbs the difference.
 */
PathParams shift_representation(const PathParams& p, const DdGrid& grid, long delay_periods,
                                long doppler_periods);

/**
 * Complex N x M grid over (Doppler row k, delay column l).
 *
 * Storage is Doppler-major: element (k, l) lives at k*M + l.
 */
class DdMatrix {
public:
    explicit DdMatrix(const DdGrid& grid);
    DdMatrix(const DdGrid& grid, ComplexVector row_major);

    const DdGrid& grid() const { return grid_; }
    std::size_t rows() const { return grid_.N(); }
    std::size_t cols() const { return grid_.M(); }

    Complex& operator()(std::size_t k, std::size_t l) { return data_[k * grid_.M() + l]; }
    const Complex& operator()(std::size_t k, std::size_t l) const {
        return data_[k * grid_.M() + l];
    }

    /// Cyclic access; any integer index is wrapped modulo N (rows) and M (cols).
    const Complex& at_wrapped(long k, long l) const;

    std::span<Complex> data() { return data_; }
    std::span<const Complex> data() const { return data_; }

    /// Sum of |A[k,l]|^2.
    double energy() const;

    DdMatrix& operator+=(const DdMatrix& other);
    DdMatrix& operator-=(const DdMatrix& other);
    DdMatrix& operator*=(Complex scale);

    friend DdMatrix operator+(DdMatrix a, const DdMatrix& b) { return a += b; }
    friend DdMatrix operator-(DdMatrix a, const DdMatrix& b) { return a -= b; }
    friend DdMatrix operator*(DdMatrix a, Complex s) { return a *= s; }

    friend bool operator==(const DdMatrix&, const DdMatrix&) = default;

private:
    void require_same_grid(const DdMatrix& other) const;

    DdGrid grid_;
    ComplexVector data_;
};

/// Column-wise vectorization: element (k, l) goes to position l*N + k.
ComplexVector vec(const DdMatrix& a);

/// Inverse of vec. Throws DimensionError when v.size() != M*N.
DdMatrix invec(std::span<const Complex> v, const DdGrid& grid);

/// Maps k into [0, N).
double wrap_doppler(double k, std::size_t N);
/// Maps l into [0, M).
double wrap_delay(double l, std::size_t M);

std::size_t wrap_index(long i, std::size_t n);

struct PhysicalUnits {
    double tau_s = 0.0;
    double nu_hz = 0.0;
    double range_m = 0.0;
    double velocity_mps = 0.0;
};

/// One-way range convention: range = c * tau.
PhysicalUnits physical_units(const PathParams& p, const DdGrid& grid);

}  // namespace otfsce
