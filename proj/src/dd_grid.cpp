// SPDX-License-Identifier: Apache-2.0

#include "otfsce/dd_grid.hpp"

#include <cmath>
#include <string>

#include "otfsce/errors.hpp"

namespace otfsce {

DdGrid::DdGrid(std::size_t M, std::size_t N, double delta_f, double fc)
    : M_(M), N_(N), delta_f_(delta_f), fc_(fc) {
    if (M < 2 || N < 2) {
        throw DimensionError("DdGrid: M and N must both be at least 2");
    }
    if (!(delta_f > 0.0) || !std::isfinite(delta_f)) {
        throw DimensionError("DdGrid: delta_f must be positive and finite");
    }
    if (!(fc > 0.0) || !std::isfinite(fc)) {
        throw DimensionError("DdGrid: carrier frequency must be positive and finite");
    }
}

double PathParams::delay_tap() const { return std::round(l_tau); }
double PathParams::doppler_tap() const { return std::round(k_nu); }

bool PathParams::in_canonical_range(const DdGrid& grid) const {
    const double M = static_cast<double>(grid.M());
    const double half_n = static_cast<double>(grid.N()) / 2.0;
    return l_tau >= 0.0 && l_tau < M && k_nu >= -half_n && k_nu < half_n &&
           std::isfinite(alpha.real()) && std::isfinite(alpha.imag());
}

void validate_path(const PathParams& p, const DdGrid& grid) {
    if (!p.in_canonical_range(grid)) {
        throw DimensionError("path (l_tau=" + std::to_string(p.l_tau) +
                             ", k_nu=" + std::to_string(p.k_nu) +
                             ") outside [0, M) x [-N/2, N/2)");
    }
}

PathParams shift_representation(const PathParams& p, const DdGrid& grid, long delay_periods,
                                long doppler_periods) {
    const double M = static_cast<double>(grid.M());
    const double N = static_cast<double>(grid.N());
    const double dp = static_cast<double>(delay_periods);
    const double up = static_cast<double>(doppler_periods);
    const double phase = -2.0 * kPi * (p.k_nu * dp / N + up * p.l_tau / M);
    PathParams out;
    out.l_tau = p.l_tau + dp * M;
    out.k_nu = p.k_nu + up * N;
    out.alpha = p.alpha * std::polar(1.0, phase);
    return out;
}

DdMatrix::DdMatrix(const DdGrid& grid) : grid_(grid), data_(grid.size()) {}

DdMatrix::DdMatrix(const DdGrid& grid, ComplexVector row_major)
    : grid_(grid), data_(std::move(row_major)) {
    if (data_.size() != grid_.size()) {
        throw DimensionError("DdMatrix: expected " + std::to_string(grid_.size()) +
                             " entries, got " + std::to_string(data_.size()));
    }
}

const Complex& DdMatrix::at_wrapped(long k, long l) const {
    return (*this)(wrap_index(k, grid_.N()), wrap_index(l, grid_.M()));
}

double DdMatrix::energy() const {
    double e = 0.0;
    for (const auto& z : data_) e += std::norm(z);
    return e;
}

void DdMatrix::require_same_grid(const DdMatrix& other) const {
    if (!(grid_ == other.grid_)) {
        throw DimensionError("DdMatrix: grid mismatch");
    }
}

DdMatrix& DdMatrix::operator+=(const DdMatrix& other) {
    require_same_grid(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

DdMatrix& DdMatrix::operator-=(const DdMatrix& other) {
    require_same_grid(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

DdMatrix& DdMatrix::operator*=(Complex scale) {
    for (auto& z : data_) z *= scale;
    return *this;
}

ComplexVector vec(const DdMatrix& a) {
    const std::size_t N = a.rows();
    const std::size_t M = a.cols();
    ComplexVector v(N * M);
    for (std::size_t l = 0; l < M; ++l) {
        for (std::size_t k = 0; k < N; ++k) v[l * N + k] = a(k, l);
    }
    return v;
}

DdMatrix invec(std::span<const Complex> v, const DdGrid& grid) {
    if (v.size() != grid.size()) {
        throw DimensionError("invec: vector length " + std::to_string(v.size()) +
                             " does not match M*N = " + std::to_string(grid.size()));
    }
    DdMatrix a(grid);
    const std::size_t N = grid.N();
    for (std::size_t l = 0; l < grid.M(); ++l) {
        for (std::size_t k = 0; k < N; ++k) a(k, l) = v[l * N + k];
    }
    return a;
}

namespace {

double wrap_real(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    // fmod of a tiny negative number can round up to exactly `period`.
    if (r >= period) r -= period;
    return r;
}

}  // namespace

double wrap_doppler(double k, std::size_t N) { return wrap_real(k, static_cast<double>(N)); }
double wrap_delay(double l, std::size_t M) { return wrap_real(l, static_cast<double>(M)); }

std::size_t wrap_index(long i, std::size_t n) {
    const long m = static_cast<long>(n);
    long r = i % m;
    if (r < 0) r += m;
    return static_cast<std::size_t>(r);
}

PhysicalUnits physical_units(const PathParams& p, const DdGrid& grid) {
    PhysicalUnits u;
    u.tau_s = p.l_tau * grid.delay_resolution();
    u.nu_hz = p.k_nu * grid.doppler_resolution();
    u.range_m = kSpeedOfLight * u.tau_s;
    u.velocity_mps = kSpeedOfLight * u.nu_hz / grid.fc();
    return u;
}

}  // namespace otfsce
