// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "otfsce/channel.hpp"
#include "otfsce/errors.hpp"
#include "otfsce/metrics.hpp"

using namespace otfsce;

namespace {

const DdGrid kGrid(64, 32, 30e3, 5.1e9);

PathEstimate as_estimate(const PathParams& p) {
    PathEstimate e;
    e.l_tau_hat = p.l_tau;
    e.k_nu_hat = p.k_nu;
    e.alpha_hat = p.alpha;
    return e;
}

}  // namespace

TEST_CASE("nmse") {
    std::mt19937_64 rng(2);
    const DdMatrix h = testing::random_matrix(kGrid, rng);
    CHECK(nmse_db(h, h) == kNmseFloorDb);
    CHECK(nmse_db(DdMatrix(kGrid), h) == doctest::Approx(0.0).epsilon(1e-12));

    // Perturbation scaled to exactly 1 % of the reference energy.
    DdMatrix e = testing::random_matrix(kGrid, rng);
    e *= Complex{std::sqrt(0.01 * h.energy() / e.energy()), 0.0};
    CHECK(std::abs(nmse_db(h + e, h) + 20.0) < 1e-9);

    const Complex c{0.3, -1.7};
    DdMatrix ch = h;
    ch *= c;
    DdMatrix che = h + e;
    che *= c;
    CHECK(std::abs(nmse_db(che, ch) - nmse_db(h + e, h)) < 1e-9);

    CHECK_THROWS_AS(nmse_db(h, DdMatrix(kGrid)), std::domain_error);
}

TEST_CASE("associate_and_score: perfect and permuted estimates") {
    const std::vector<PathParams> truth{{0.0, 1.13, {0.98, 0.1}}, {6.7, -1.8, {0.1, 0.05}},
                                        {12.2, 0.4, {0.0, 0.2}}};
    std::vector<PathEstimate> est;
    for (const auto& p : truth) est.push_back(as_estimate(p));

    const TrialScore s = associate_and_score(truth, est, kGrid);
    CHECK(s.misses == 0);
    CHECK(s.spurious == 0);
    CHECK(*s.mse_delay_s2 == 0.0);
    CHECK(*s.mse_doppler_hz2 == 0.0);
    CHECK(*s.mse_gain == 0.0);

    std::vector<PathEstimate> shuffled{est[2], est[0], est[1]};
    std::vector<PathParams> truth_shuffled{truth[1], truth[2], truth[0]};
    est[0].l_tau_hat += 0.02;
    shuffled[1].l_tau_hat += 0.02;
    const TrialScore a = associate_and_score(truth, est, kGrid);
    const TrialScore b = associate_and_score(truth_shuffled, shuffled, kGrid);
    CHECK(*a.mse_delay_grid2 == doctest::Approx(0.0004 / 3.0));
    CHECK(*b.mse_delay_grid2 == doctest::Approx(*a.mse_delay_grid2));
    CHECK(*b.mse_delay_s2 ==
          doctest::Approx(*a.mse_delay_grid2 * kGrid.delay_resolution() * kGrid.delay_resolution()));
}

TEST_CASE("associate_and_score: spurious and missing paths") {
    const std::vector<PathParams> truth{{5.2, 3.1, {1, 0}}, {20.4, -7.6, {0.5, 0.1}}};
    std::vector<PathEstimate> est{as_estimate({5.21, 3.1, {1, 0}}), as_estimate({20.4, -7.6, {0.5, 0.1}})};
    const TrialScore base = associate_and_score(truth, est, kGrid);

    est.push_back(as_estimate({45.0, 12.0, {0.05, 0}}));
    const TrialScore extra = associate_and_score(truth, est, kGrid);
    CHECK(extra.spurious == 1);
    CHECK(extra.misses == 0);
    CHECK(*extra.mse_delay_grid2 == *base.mse_delay_grid2);
    CHECK(*extra.mse_gain == *base.mse_gain);

    // Nothing within a cell of the second truth: it is a miss.
    const std::vector<PathEstimate> far{as_estimate({5.2, 3.1, {1, 0}}), as_estimate({23.0, -7.6, {0.5, 0}})};
    const TrialScore missed = associate_and_score(truth, far, kGrid);
    CHECK(missed.misses == 1);
    CHECK(missed.spurious == 1);
    CHECK(*missed.mse_delay_grid2 == 0.0);

    const TrialScore none = associate_and_score(truth, {}, kGrid);
    CHECK(none.misses == 2);
    CHECK_FALSE(none.mse_delay_s2.has_value());
}

TEST_CASE("associate_and_score: wrapped estimates match without a phase error") {
    const PathParams truth{0.2, -15.8, std::polar(0.9, 0.3)};
    // Same physical path written one period away on both axes.
    const PathParams wrapped = shift_representation(truth, kGrid, 1, 1);
    CHECK(wrapped.l_tau == doctest::Approx(64.2));
    const TrialScore s = associate_and_score(std::vector{truth}, std::vector{as_estimate(wrapped)}, kGrid);
    CHECK(s.misses == 0);
    CHECK(*s.mse_delay_grid2 < 1e-20);
    CHECK(*s.mse_doppler_grid2 < 1e-20);
    CHECK(*s.mse_gain < 1e-20);
}

TEST_CASE("associate_and_score: greedy pairs the closest first") {
    const std::vector<PathParams> truth{{10.0, 2.0, {1, 0}}, {10.6, 2.0, {1, 0}}};
    const std::vector<PathEstimate> est{as_estimate({10.5, 2.0, {1, 0}}), as_estimate({9.8, 2.0, {1, 0}})};
    const TrialScore s = associate_and_score(truth, est, kGrid);
    REQUIRE(s.matched_pairs.size() == 2);
    CHECK(s.matched_pairs[0].estimate == 1);
    CHECK(s.matched_pairs[1].estimate == 0);
    CHECK(*s.mse_delay_grid2 == doctest::Approx((0.04 + 0.01) / 2.0));
}

TEST_CASE("joint grid oracle") {
    const SearchConfig cfg;
    const DdMatrix integer = generate_dd_channel(std::vector<PathParams>{{9.0, -4.0, {1, 0}}}, kGrid);
    const auto e = joint_grid_oracle(integer, {28, 9, 1.0}, cfg);
    CHECK(e.l_tau == 9.0);
    CHECK(e.k_nu == -4.0);

    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 5; ++rep) {
        const PathParams p = testing::random_fractional_path(kGrid, rng);
        const DdMatrix h = generate_dd_channel(std::vector{p}, kGrid);
        const TapLocation tap = extract_paths(h, 1).at(0);
        const auto j = joint_grid_oracle(h, tap, cfg);
        const auto s = estimate_delay_doppler(h, tap, cfg);
        CHECK(std::abs(j.l_tau - s.l_tau) <= 0.01 + 1e-9);
        CHECK(std::abs(j.k_nu - s.k_nu) <= 0.01 + 1e-9);
    }

    const DdMatrix two = generate_dd_channel(std::vector<PathParams>{{20.3, 3.2, {1, 0}}, {22.6, 5.4, {0.6, 0}}}, kGrid);
    const TapLocation tap = extract_paths(two, 1).at(0);
    const auto j = joint_grid_oracle(two, tap, cfg);
    const auto s = estimate_delay_doppler(two, tap, cfg);
    MESSAGE("two-path separable vs joint: dl=" << s.l_tau - j.l_tau << " dk=" << s.k_nu - j.k_nu);

    CHECK_THROWS_AS(joint_grid_oracle(integer, {28, 9, 1.0}, SearchConfig{1.0, 0.001, 1}), DimensionError);
}

TEST_CASE("ser") {
    const std::vector<int> a{0, 1, 2, 3};
    const std::vector<int> b{3, 2, 1, 0};
    const std::vector<int> c{0, 1, 1, 0};
    CHECK(ser(a, a) == 0.0);
    CHECK(ser(a, b) == 1.0);
    CHECK(ser(a, c) == 0.5);
    CHECK_THROWS_AS(ser(a, std::vector<int>{1}), DimensionError);
}
