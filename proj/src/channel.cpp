// SPDX-License-Identifier: Apache-2.0

#include "otfsce/channel.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "otfsce/errors.hpp"

namespace otfsce {

namespace {

constexpr double kIntegerTol = 1e-12;

// FFTW planner calls are not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex, FftwFree>;

FftwBuffer alloc_buffer(std::size_t n) {
    return FftwBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

class Plan2d {
public:
    Plan2d(std::size_t rows, std::size_t cols, fftw_complex* in, fftw_complex* out, int sign) {
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), in, out, sign,
                                 FFTW_ESTIMATE);
    }
    ~Plan2d() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    Plan2d(const Plan2d&) = delete;
    Plan2d& operator=(const Plan2d&) = delete;

    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_ = nullptr;
};

}  // namespace

void ScenarioConfig::validate(const DdGrid& grid) const {
    if (num_paths < 1) throw ConfigError("scenario: num_paths must be >= 1");
    if (!(max_doppler_hz >= 0.0)) throw ConfigError("scenario: max_doppler_hz must be >= 0");
    if (max_doppler_hz >= grid.delta_f() / 2.0) {
        throw ConfigError("scenario: max_doppler_hz must stay below delta_f/2");
    }
    const auto [low, high] = delay_range_s;
    if (!(low >= 0.0) || !(low <= high)) {
        throw ConfigError("scenario: delay_range_s must satisfy 0 <= low <= high");
    }
    if (high > grid.T()) {
        throw ConfigError("scenario: delay_range_s upper bound exceeds the symbol duration T");
    }
    if (!(fixed_delay_gap_s >= 0.0) || fixed_delay_gap_s >= grid.T()) {
        throw ConfigError("scenario: fixed_delay_gap_s must lie in [0, T)");
    }
}

NoiseConfig NoiseConfig::from_psnr_db(double psnr_db, double pilot_energy) {
    return NoiseConfig{pilot_energy / std::pow(10.0, psnr_db / 10.0)};
}

Complex periodic_sum_kernel(double x, std::size_t L) {
    const double len = static_cast<double>(L);
    if (std::abs(x - std::round(x)) < kIntegerTol) return {len, 0.0};
    const double lx = len * x;
    if (std::abs(lx - std::round(lx)) < kIntegerTol) return {0.0, 0.0};
    const double ratio = std::sin(kPi * lx) / std::sin(kPi * x);
    return std::polar(1.0, kPi * (len - 1.0) * x) * ratio;
}

ComplexVector doppler_response(double k_nu, std::size_t N) {
    ComplexVector h(N);
    const double n = static_cast<double>(N);
    for (std::size_t k = 0; k < N; ++k) {
        h[k] = periodic_sum_kernel((k_nu - static_cast<double>(k)) / n, N);
    }
    return h;
}

ComplexVector delay_response(double l_tau, std::size_t M) {
    ComplexVector h(M);
    const double m = static_cast<double>(M);
    for (std::size_t l = 0; l < M; ++l) {
        h[l] = periodic_sum_kernel((static_cast<double>(l) - l_tau) / m, M);
    }
    return h;
}

Complex path_phase(double k_nu, double l_tau, const DdGrid& grid) {
    return std::polar(1.0, 2.0 * kPi * k_nu * l_tau / static_cast<double>(grid.size()));
}

DdMatrix generate_dd_channel(std::span<const PathParams> paths, const DdGrid& grid) {
    DdMatrix h(grid);
    const double mn = static_cast<double>(grid.size());
    for (const auto& p : paths) {
        const Complex scale = p.alpha * path_phase(p.k_nu, p.l_tau, grid) / mn;
        const ComplexVector hn = doppler_response(p.k_nu, grid.N());
        const ComplexVector ht = delay_response(p.l_tau, grid.M());
        for (std::size_t k = 0; k < grid.N(); ++k) {
            const Complex row = scale * hn[k];
            if (row == Complex{}) continue;
            for (std::size_t l = 0; l < grid.M(); ++l) h(k, l) += row * ht[l];
        }
    }
    return h;
}

DdMatrix circular_convolve(const DdMatrix& a, const DdMatrix& b) {
    if (!(a.grid() == b.grid())) throw DimensionError("circular_convolve: grid mismatch");
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    const std::size_t n = rows * cols;

    auto fa = alloc_buffer(n);
    auto fb = alloc_buffer(n);
    auto* ca = reinterpret_cast<Complex*>(fa.get());
    auto* cb = reinterpret_cast<Complex*>(fb.get());
    std::copy(a.data().begin(), a.data().end(), ca);
    std::copy(b.data().begin(), b.data().end(), cb);

    {
        Plan2d pa(rows, cols, fa.get(), fa.get(), FFTW_FORWARD);
        Plan2d pb(rows, cols, fb.get(), fb.get(), FFTW_FORWARD);
        // FFTW_ESTIMATE planning leaves the input untouched.
        pa.execute();
        pb.execute();
    }
    for (std::size_t i = 0; i < n; ++i) ca[i] *= cb[i];
    {
        Plan2d inv(rows, cols, fa.get(), fa.get(), FFTW_BACKWARD);
        inv.execute();
    }

    DdMatrix out(a.grid());
    const double norm = 1.0 / static_cast<double>(n);
    auto dst = out.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] = ca[i] * norm;
    return out;
}

DdMatrix apply_channel(const DdMatrix& x, std::span<const PathParams> paths, const DdGrid& grid) {
    if (!(x.grid() == grid)) throw DimensionError("apply_channel: grid mismatch");
    return circular_convolve(generate_dd_channel(paths, grid), x);
}

DdMatrix add_awgn(const DdMatrix& a, const NoiseConfig& noise, Rng& rng) {
    if (!(noise.sigma2 > 0.0)) throw ConfigError("add_awgn: sigma2 must be positive");
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.sigma2 / 2.0));
    DdMatrix out = a;
    for (auto& z : out.data()) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        z += Complex{re, im};
    }
    return out;
}

std::vector<PathParams> sample_scenario(const ScenarioConfig& cfg, const DdGrid& grid, Rng& rng) {
    cfg.validate(grid);
    const auto count = static_cast<std::size_t>(cfg.num_paths);
    std::vector<PathParams> paths(count);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> delay(cfg.delay_range_s.first,
                                                 cfg.delay_range_s.second);
    const double res_tau = grid.delay_resolution();
    const double res_nu = grid.doppler_resolution();

    for (std::size_t p = 0; p < count; ++p) {
        double tau = 0.0;
        if (p == 1) {
            tau = cfg.fixed_delay_gap_s;
        } else if (p >= 2) {
            tau = delay(rng);
        }
        // theta uniform on (0, 2pi]
        const double theta = 2.0 * kPi * (1.0 - unit(rng));
        paths[p].l_tau = tau / res_tau;
        paths[p].k_nu = cfg.max_doppler_hz * std::cos(theta) / res_nu;
        if (paths[p].l_tau >= static_cast<double>(grid.M())) {
            paths[p].l_tau = std::nextafter(static_cast<double>(grid.M()), 0.0);
        }
    }

    const double k_lin = std::pow(10.0, cfg.rice_factor_db / 10.0);
    const double los_phase = 2.0 * kPi * unit(rng);
    if (count == 1) {
        paths[0].alpha = std::polar(1.0, los_phase);
        return paths;
    }
    paths[0].alpha = std::polar(std::sqrt(k_lin / (k_lin + 1.0)), los_phase);
    const double nlos_var = 1.0 / ((k_lin + 1.0) * static_cast<double>(count - 1));
    std::normal_distribution<double> gauss(0.0, std::sqrt(nlos_var / 2.0));
    for (std::size_t p = 1; p < count; ++p) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        paths[p].alpha = {re, im};
    }
    return paths;
}

}  // namespace otfsce
