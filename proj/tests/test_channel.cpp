// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "otfsce/channel.hpp"
#include "otfsce/errors.hpp"

using namespace otfsce;
using otfsce::testing::direct_channel;
using otfsce::testing::direct_circular_convolution;
using otfsce::testing::direct_sum;
using otfsce::testing::max_abs_diff;

namespace {
const DdGrid kGrid(64, 32, 30e3, 5.1e9);
const DdGrid kSmall(8, 4, 30e3, 5.1e9);
}  // namespace

TEST_CASE("periodic sum kernel") {
    CHECK(periodic_sum_kernel(0.0, 32) == Complex{32.0, 0.0});
    CHECK(std::abs(periodic_sum_kernel(1.0 / 32.0, 32)) < 1e-12);
    CHECK(std::abs(periodic_sum_kernel(0.3 / 32.0, 32) - direct_sum(0.3 / 32.0, 32)) < 1e-12);
    CHECK(periodic_sum_kernel(3.0, 7) == Complex{7.0, 0.0});

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (std::size_t L : {2u, 5u, 32u, 64u}) {
        for (int i = 0; i < 100; ++i) {
            const double x = u(rng);
            CHECK(std::abs(periodic_sum_kernel(x, L) - direct_sum(x, L)) < 1e-9);
        }
    }
}

TEST_CASE("channel synthesis: empty, integer and fractional paths") {
    const DdMatrix empty = generate_dd_channel(std::vector<PathParams>{}, kGrid);
    CHECK(empty.energy() == 0.0);

    const DdMatrix h = generate_dd_channel(std::vector<PathParams>{{3.0, 5.0, {1, 0}}}, kGrid);
    const Complex expected = std::polar(1.0, 2.0 * kPi * 15.0 / 2048.0);
    CHECK(std::abs(h(5, 3) - expected) < 1e-12);
    std::size_t nonzero = 0;
    for (const auto& z : h.data()) nonzero += std::abs(z) > 1e-12;
    CHECK(nonzero == 1);

    const std::vector<PathParams> frac{{3.4, 5.3, {1, 0}}};
    const DdMatrix hf = generate_dd_channel(frac, kGrid);
    CHECK(max_abs_diff(hf, direct_channel(frac, kGrid)) < 1e-10);
}

TEST_CASE("negative Doppler addresses the wrapped row") {
    const DdMatrix h = generate_dd_channel(std::vector<PathParams>{{2.0, -3.0, {1, 0}}}, kGrid);
    CHECK(std::abs(h(29, 2)) == doctest::Approx(1.0));
}

TEST_CASE("synthesis is linear in the path set") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<PathParams> a{testing::random_fractional_path(kGrid, rng),
                                  testing::random_fractional_path(kGrid, rng)};
        std::vector<PathParams> b{testing::random_fractional_path(kGrid, rng)};
        std::vector<PathParams> all = a;
        all.insert(all.end(), b.begin(), b.end());
        const DdMatrix sum = generate_dd_channel(a, kGrid) + generate_dd_channel(b, kGrid);
        CHECK(max_abs_diff(generate_dd_channel(all, kGrid), sum) < 1e-13);
    }
}

TEST_CASE("integer path sets keep exactly P nonzero entries") {
    const std::vector<PathParams> paths{{0.0, 0.0, {1, 0}}, {4.0, -2.0, {0.3, 0.1}}, {10.0, 7.0, {0, -0.2}}};
    const DdMatrix h = generate_dd_channel(paths, kGrid);
    std::size_t nonzero = 0;
    for (const auto& z : h.data()) nonzero += std::abs(z) > 1e-12;
    CHECK(nonzero == paths.size());
}

TEST_CASE("apply_channel: identity and cyclic shift") {
    std::mt19937_64 rng(9);
    const DdMatrix x = testing::random_matrix(kGrid, rng);
    const DdMatrix y = apply_channel(x, std::vector<PathParams>{{0.0, 0.0, {1, 0}}}, kGrid);
    CHECK(max_abs_diff(x, y) < 1e-10);

    DdMatrix impulse(kGrid);
    impulse(30, 60) = 1.0;
    const std::vector<PathParams> shift{{7.0, 4.0, {1, 0}}};
    const DdMatrix ys = apply_channel(impulse, shift, kGrid);
    const Complex phase = std::polar(1.0, 2.0 * kPi * 28.0 / 2048.0);
    CHECK(std::abs(ys((30 + 4) % 32, (60 + 7) % 64) - phase) < 1e-10);
    CHECK(ys.energy() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("apply_channel agrees with direct circular convolution") {
    std::mt19937_64 rng(21);
    for (const DdGrid& g : {kSmall, DdGrid(16, 8, 30e3, 5.1e9)}) {
        const std::vector<PathParams> paths{{1.3, 0.4, std::polar(0.9, 0.3)}, {4.7, -1.2, std::polar(0.4, -2.0)}};
        const DdMatrix x = testing::random_matrix(g, rng);
        const DdMatrix y = apply_channel(x, paths, g);
        const DdMatrix ref = direct_circular_convolution(generate_dd_channel(paths, g), x);
        CHECK(max_abs_diff(y, ref) < 1e-9);
        // Parseval-side check: energies agree to relative 1e-9.
        CHECK(y.energy() == doctest::Approx(ref.energy()).epsilon(1e-9));
    }
    CHECK_THROWS_AS(apply_channel(DdMatrix(kSmall), {}, kGrid), DimensionError);
}

TEST_CASE("awgn statistics and determinism") {
    const DdGrid g(250, 400, 30e3, 5.1e9);  // 1e5 entries
    const DdMatrix zero(g);
    Rng a(42);
    const DdMatrix noisy = add_awgn(zero, {0.5}, a);
    const double var = noisy.energy() / static_cast<double>(g.size());
    CHECK(var == doctest::Approx(0.5).epsilon(0.02));
    double re = 0.0;
    for (const auto& z : noisy.data()) re += z.real() * z.real();
    CHECK(re / static_cast<double>(g.size()) == doctest::Approx(0.25).epsilon(0.02));

    Rng b(42);
    CHECK(add_awgn(zero, {0.5}, b) == noisy);

    std::mt19937_64 rng(1);
    const DdMatrix x = testing::random_matrix(kSmall, rng);
    Rng c(3);
    CHECK(max_abs_diff(add_awgn(x, {1e-30}, c), x) < 1e-12);
    CHECK_THROWS_AS(add_awgn(x, {0.0}, c), ConfigError);
}

TEST_CASE("psnr to noise variance") {
    CHECK(NoiseConfig::from_psnr_db(20.0, 1.0).sigma2 == doctest::Approx(0.01));
    CHECK(NoiseConfig::from_psnr_db(0.0, 2.0).sigma2 == doctest::Approx(2.0));
}

TEST_CASE("scenario sampling follows the configured layout") {
    const ScenarioConfig cfg;  // P=5, 0.2 us gap, (0.867, 7) us, 1700 Hz, K=15 dB
    Rng rng(2024);
    const double res_tau = kGrid.delay_resolution();
    const double kmax = 1700.0 / kGrid.doppler_resolution();
    for (int rep = 0; rep < 200; ++rep) {
        const auto paths = sample_scenario(cfg, kGrid, rng);
        REQUIRE(paths.size() == 5);
        CHECK(paths[0].l_tau == 0.0);
        CHECK(paths[1].l_tau * res_tau == doctest::Approx(0.2e-6));
        for (std::size_t p = 2; p < 5; ++p) {
            CHECK(paths[p].l_tau * res_tau >= 0.867e-6);
            CHECK(paths[p].l_tau * res_tau <= 7e-6);
        }
        for (const auto& p : paths) {
            CHECK(std::abs(p.k_nu) <= kmax + 1e-12);
            CHECK(p.in_canonical_range(kGrid));
        }
    }

    ScenarioConfig still = cfg;
    still.max_doppler_hz = 0.0;
    for (const auto& p : sample_scenario(still, kGrid, rng)) CHECK(p.k_nu == 0.0);
}

TEST_CASE("scenario gains: unit mean power and Rician K-factor") {
    const ScenarioConfig cfg;
    Rng rng(77);
    const int runs = 10000;
    double total = 0.0;
    double los = 0.0;
    double nlos = 0.0;
    for (int i = 0; i < runs; ++i) {
        const auto paths = sample_scenario(cfg, kGrid, rng);
        los += std::norm(paths[0].alpha);
        for (std::size_t p = 1; p < paths.size(); ++p) nlos += std::norm(paths[p].alpha);
    }
    total = (los + nlos) / runs;
    CHECK(total == doctest::Approx(1.0).epsilon(0.02));
    CHECK((los / nlos) == doctest::Approx(std::pow(10.0, 1.5)).epsilon(0.05));
}

TEST_CASE("scenario validation") {
    ScenarioConfig cfg;
    cfg.delay_range_s = {1e-6, 40e-6};  // beyond T = 33.3 us
    Rng rng(1);
    CHECK_THROWS_AS(sample_scenario(cfg, kGrid, rng), ConfigError);
    cfg = ScenarioConfig{};
    cfg.num_paths = 0;
    CHECK_THROWS_AS(sample_scenario(cfg, kGrid, rng), ConfigError);
    cfg = ScenarioConfig{};
    cfg.delay_range_s = {5e-6, 1e-6};
    CHECK_THROWS_AS(sample_scenario(cfg, kGrid, rng), ConfigError);
    cfg = ScenarioConfig{};
    cfg.max_doppler_hz = 20e3;
    CHECK_THROWS_AS(sample_scenario(cfg, kGrid, rng), ConfigError);

    cfg = ScenarioConfig{};
    cfg.num_paths = 1;
    const auto single = sample_scenario(cfg, kGrid, rng);
    REQUIRE(single.size() == 1);
    CHECK(std::abs(single[0].alpha) == doctest::Approx(1.0));
}
