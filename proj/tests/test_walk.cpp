#include <cmath>

#include "doctest.h"
#include "rwrp/rng.hpp"
#include "rwrp/walk.hpp"

using namespace rwrp;

TEST_CASE("step law normalizes and matches the tilt formulas") {
    for (int d : {1, 2, 3, 4})
        for (double h : {0.0, 0.5, 1.0}) {
            StepLaw law = step_law({d, h});
            double sigma = std::exp(h) + std::exp(-h) + 2.0 * d - 2.0;
            CHECK(law.sigma == doctest::Approx(sigma).epsilon(1e-15));
            CHECK(law.p_plus == doctest::Approx(std::exp(h) / sigma));
            CHECK(law.p_minus == doctest::Approx(std::exp(-h) / sigma));
            double total = law.p_plus + law.p_minus + (2 * d - 2) * law.p_perp;
            CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(law.lambda ==
                  doctest::Approx(std::log(sigma / (2 * d))).epsilon(1e-14));
        }
}

TEST_CASE("escape probability is tanh in one dimension") {
    for (double h : {0.25, 0.5, 1.0, 2.0})
        CHECK(escape_prob({1, h}) == doctest::Approx(std::tanh(h)).epsilon(1e-14));
    // d = 2, h = 1 by hand: (e - 1/e) / (e + 1/e + 2)
    double e = std::exp(1.0);
    CHECK(escape_prob({2, 1.0}) ==
          doctest::Approx((e - 1.0 / e) / (e + 1.0 / e + 2.0)).epsilon(1e-14));
}

TEST_CASE("negative-drift mgf is minimized at theta = h") {
    for (int d : {1, 3})
        for (double h : {0.5, 1.0}) {
            WalkConfig w{d, h};
            double at_h = proj_mgf_neg(w, h);
            CHECK(at_h == doctest::Approx(2.0 * d / step_law(w).sigma)
                              .epsilon(1e-14));
            CHECK(chernoff_rho_min(w) == doctest::Approx(at_h).epsilon(1e-14));
            CHECK(proj_mgf_neg(w, h - 0.2) > at_h);
            CHECK(proj_mgf_neg(w, h + 0.2) > at_h);
        }
}

TEST_CASE("hitting probability closed form") {
    CHECK(hitting_prob_neg({2, 1.0}, 1) == doctest::Approx(std::exp(-2.0)));
    CHECK(hitting_prob_neg({3, 0.5}, 2) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("local times count window visits, start excluded") {
    Path p;
    p.d = 2;
    p.steps = {0, 1, 0};  // +x, -x, +x
    LocalTimeField f = local_times(p);
    int x1[8] = {1, 0}, x0[8] = {0, 0};
    CHECK(f.at(pack_site(x1, 2)) == 2);
    CHECK(f.at(pack_site(x0, 2)) == 1);
    CHECK(f.range_size() == 2);
    CHECK(f.total() == 3);
    CHECK(f.norm_sq() == 5);
    LocalTimeField w = local_times(p, 1, 3);
    CHECK(w.at(pack_site(x1, 2)) == 1);
    CHECK(w.at(pack_site(x0, 2)) == 1);
    CHECK(w.total() == 2);
}

TEST_CASE("projected heights track the first coordinate") {
    Path p;
    p.d = 2;
    p.steps = {0, 2, 1, 0};  // +x, +y, -x, +x
    CHECK(proj_heights(p) == std::vector<int>{0, 1, 1, 0, 1});
}

TEST_CASE("path log weight sums step log probabilities") {
    StepLaw law = step_law({1, 1.0});
    Path p;
    p.d = 1;
    p.steps = {0, 0};
    CHECK(path_log_weight(law, p) ==
          doctest::Approx(2.0 * std::log(law.p_plus)).epsilon(1e-14));
}

TEST_CASE("sampled paths replay and have valid steps") {
    WalkConfig w{3, 0.7};
    RngStream s1(11, 2), s2(11, 2);
    Path a = sample_path(w, 50, s1);
    Path b = sample_path(w, 50, s2);
    CHECK(a.steps == b.steps);
    CHECK(a.length() == 50);
    for (uint8_t e : a.steps) CHECK(e < 6);
}

TEST_CASE("dp hitting matches the closed form within its certificate") {
    for (double h : {0.5, 1.0})
        for (int L : {1, 2}) {
            WalkConfig w{2, h};
            HitEstimate dp = dp_hit_probability(w, L);
            CHECK(std::fabs(dp.freq - hitting_prob_neg(w, L)) <=
                  dp.residual + 1e-12);
        }
}

TEST_CASE("mc hitting estimate is reproducible and unbiased") {
    WalkConfig w{1, 1.0};
    HitEstimate a = mc_hit_frequency(w, 1, 20000, RngStream(9, 5));
    HitEstimate b = mc_hit_frequency(w, 1, 20000, RngStream(9, 5));
    CHECK(a.freq == b.freq);
    double exact = std::exp(-2.0);
    CHECK(std::fabs(a.freq - exact) <= 4.0 * a.stderr_ + a.residual);
}
