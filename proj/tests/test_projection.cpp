#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "rwrp/projection.hpp"

using namespace rwrp;

TEST_CASE("proj_occupation rows are distributions with the right atoms") {
    auto law = step_law(WalkConfig{3, 0.7});
    auto one = proj_occupation(law, 1);
    REQUIRE(one.size() == 3);
    CHECK(one[0] == doctest::Approx(law.proj_down()).epsilon(1e-14));
    CHECK(one[1] == doctest::Approx(law.proj_stay()).epsilon(1e-14));
    CHECK(one[2] == doctest::Approx(law.proj_up()).epsilon(1e-14));
    for (int n = 2; n <= 6; ++n) {
        auto occ = proj_occupation(law, n);
        REQUIRE(static_cast<int>(occ.size()) == 2 * n + 1);
        CHECK(std::accumulate(occ.begin(), occ.end(), 0.0) ==
              doctest::Approx(1.0).epsilon(1e-13));
    }
    // two-step middle entry by hand: up*down + down*up + stay^2
    auto two = proj_occupation(law, 2);
    double mid = 2 * law.proj_up() * law.proj_down() + law.proj_stay() * law.proj_stay();
    CHECK(two[2] == doctest::Approx(mid).epsilon(1e-14));
}

TEST_CASE("green_sum brackets the escape-probability reciprocal") {
    for (int d : {1, 2, 3}) {
        WalkConfig cfg{d, 0.8};
        double alpha = escape_prob(cfg);
        auto ts = green_sum(cfg, 400);
        CHECK(ts.value <= 1.0 / alpha + 1e-12);
        CHECK(ts.value + ts.tail >= 1.0 / alpha - 1e-12);
        CHECK(ts.tail < 1e-8);
        auto shorter = green_sum(cfg, 100);
        CHECK(shorter.value <= ts.value + 1e-15);
        CHECK(shorter.tail >= ts.tail);
    }
}

TEST_CASE("closed-form discounted plane series matches brute convolution") {
    auto law = step_law(WalkConfig{2, 1.0});
    const double gamma = 0.9;
    for (int L : {0, 1, 2}) {
        double brute = (L == 0) ? 1.0 : 0.0;  // the n = 0 term
        double g = gamma;
        for (int n = 1; n <= 400; ++n, g *= gamma) {
            auto occ = proj_occupation(law, n);
            if (L <= n) brute += g * occ[static_cast<std::size_t>(L + n)];
        }
        CHECK(point_to_plane_gamma_closed(law, gamma, L) ==
              doctest::Approx(brute).epsilon(1e-11));
    }
    // undiscounted L = 0 series is the Green sum limit 1/alpha
    CHECK(point_to_plane_gamma_closed(law, 1.0, 0) ==
          doctest::Approx(1.0 / escape_prob(WalkConfig{2, 1.0})).epsilon(1e-12));
}

TEST_CASE("slab resolvent solves (I - T) x = b and slab_tail sums the orbit") {
    auto law = step_law(WalkConfig{2, 0.6});
    SlabChain chain(law, 5, 0.95);
    std::vector<double> b{0.2, 0.0, 0.7, 0.1, 0.4};
    auto x = chain.solve_resolvent(b);
    REQUIRE(x.size() == b.size());
    auto tx = x;
    chain.apply(tx);
    for (std::size_t i = 0; i < b.size(); ++i)
        CHECK(x[i] - tx[i] == doctest::Approx(b[i]).epsilon(1e-12));

    double direct = std::accumulate(x.begin(), x.end(), 0.0) -
                    std::accumulate(b.begin(), b.end(), 0.0);
    CHECK(slab_tail(chain, b) == doctest::Approx(direct).epsilon(1e-11));
}

TEST_CASE("span automaton reproduces the one-level geometric series") {
    auto law = step_law(WalkConfig{2, 1.0});
    const double gamma = 0.8;
    auto ss = span_series(law, 3, gamma);
    CHECK(ss.tail < 1e-10);
    double hand = gamma * law.proj_up() / (1.0 - gamma * law.proj_stay());
    CHECK(ss.bridge(1) == doctest::Approx(hand).epsilon(1e-11));
    CHECK(ss.irreducible(1) == doctest::Approx(ss.bridge(1)).epsilon(1e-14));
    for (int L = 1; L <= 3; ++L) {
        CHECK(ss.irreducible(L) <= ss.bridge(L) + 1e-14);
        CHECK(ss.bridge(L) > 0.0);
        CHECK(ss.irreducible2(L) <= ss.bridge(L) * ss.bridge(L) + 1e-14);
        double i1 = ss.irreducible(L);
        CHECK(i1 * i1 <= ss.irreducible2(L) + 1e-14);
    }
    // bridges end on the plane, so their series part-sums the plane series
    for (int L = 1; L <= 3; ++L)
        CHECK(ss.bridge(L) <= point_to_plane_gamma_closed(law, gamma, L) + 1e-12);
}

TEST_CASE("span series satisfies the renewal factorization") {
    auto law = step_law(WalkConfig{3, 0.9});
    const double gamma = 0.85;
    auto ss = span_series(law, 3, gamma);
    double tol = 10 * ss.tail + 1e-11;
    double l1 = ss.irreducible(1), l2 = ss.irreducible(2), l3 = ss.irreducible(3);
    CHECK(std::fabs(ss.bridge(2) - (l2 + l1 * l1)) <= tol);
    CHECK(std::fabs(ss.bridge(3) - (l3 + 2 * l1 * l2 + l1 * l1 * l1)) <= tol);
    // two-replica version: joint irreducibles convolve to squared bridges
    double b1 = ss.bridge(1), b2 = ss.bridge(2);
    CHECK(std::fabs(ss.irreducible2(1) - b1 * b1) <= tol);
    CHECK(std::fabs(ss.irreducible2(2) - (b2 * b2 - b1 * b1 * b1 * b1)) <= 20 * tol);
}
