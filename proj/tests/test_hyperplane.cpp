#include <cmath>

#include "doctest.h"
#include "rwrp/hyperplane.hpp"

using namespace rwrp;

TEST_CASE("projection measurability and the per-step discount") {
    auto pm = point_mass_potential(0.5);
    auto bern = bernoulli_potential(0.5, 1.0);
    CHECK(projection_measurable(pm, 0.3));
    CHECK(projection_measurable(bern, 0.0));
    CHECK(!projection_measurable(bern, 0.3));
    CHECK(per_step_gamma(pm, 0.3) == doctest::Approx(std::exp(-0.3 * 0.5)).epsilon(1e-14));
    CHECK(per_step_gamma(bern, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("plane series at zero disorder hit projected-walk closed forms") {
    WalkConfig cfg{2, 1.0};
    auto bern = bernoulli_potential(0.5, 1.0);
    auto law = step_law(cfg);

    auto g1 = truncated_point_to_plane(cfg, bern, 0.0, 1, PlaneKind::EndpointG, 1e-10, 1e8);
    CHECK(!g1.heuristic);
    CHECK(g1.certified_tail <= 1e-10);
    CHECK(g1.value ==
          doctest::Approx(point_to_plane_gamma_closed(law, 1.0, 1)).epsilon(1e-9));

    auto b1 = truncated_point_to_plane(cfg, bern, 0.0, 1, PlaneKind::BridgeB, 1e-10, 1e8);
    double hand = law.proj_up() / (1.0 - law.proj_stay());
    CHECK(b1.value == doctest::Approx(hand).epsilon(1e-9));

    auto b2 = truncated_point_to_plane(cfg, bern, 0.0, 1, PlaneKind::BridgeB2, 1e-10, 1e8);
    CHECK(b2.value == doctest::Approx(hand * hand).epsilon(1e-8));
}

TEST_CASE("series ordering G >= B >= Lambda at matching parameters") {
    WalkConfig cfg{2, 1.0};
    auto pm = point_mass_potential(0.5);
    const double beta = 0.3, tol = 1e-9;
    for (int L = 1; L <= 3; ++L) {
        auto g = truncated_point_to_plane(cfg, pm, beta, L, PlaneKind::EndpointG, tol, 1e8);
        auto b = truncated_point_to_plane(cfg, pm, beta, L, PlaneKind::BridgeB, tol, 1e8);
        auto l = truncated_point_to_plane(cfg, pm, beta, L, PlaneKind::IrreducibleLambda,
                                          tol, 1e8);
        CHECK(g.value > 0.0);
        CHECK(b.value <= g.value + tol);
        CHECK(l.value <= b.value + tol);
        CHECK(l.value > 0.0);
        auto b2 = truncated_point_to_plane(cfg, pm, beta, L, PlaneKind::BridgeB2, tol, 1e8);
        auto l2 = truncated_point_to_plane(cfg, pm, beta, L,
                                           PlaneKind::IrreducibleLambda2, tol, 1e8);
        CHECK(b2.value == doctest::Approx(b.value * b.value).epsilon(1e-7));
        CHECK(l2.value <= b2.value + tol);
        CHECK(l.value * l.value <= l2.value + tol);
    }
}

TEST_CASE("general potentials run the certified DFS engine") {
    WalkConfig cfg{2, 1.0};
    auto bern = bernoulli_potential(0.5, 1.0);
    auto b = truncated_point_to_plane(cfg, bern, 0.3, 1, PlaneKind::BridgeB, 1e-6, 1e8);
    CHECK(!b.heuristic);
    CHECK(b.certified_tail <= 1e-6);
    CHECK(b.value > 0.0);
    // disorder with rho < 1 only lightens sites: B must exceed the
    // beta -> infinity limit and stay below the beta = 0 value
    auto b0 = truncated_point_to_plane(cfg, bern, 0.0, 1, PlaneKind::BridgeB, 1e-8, 1e8);
    CHECK(b.value < b0.value);
    CHECK(b.engine == "dfs");

    auto l = truncated_point_to_plane(cfg, bern, 0.3, 1, PlaneKind::IrreducibleLambda,
                                      1e-6, 1e8);
    CHECK(l.value == doctest::Approx(b.value).epsilon(1e-5));  // span 1: identical events
}

TEST_CASE("zero-drift endpoint series: divergence guard and heuristic flag") {
    WalkConfig cfg{2, 0.0};
    auto pm = point_mass_potential(0.5);
    // with a positive discount the bridge chain is substochastic: certified
    auto b = truncated_point_to_plane(cfg, pm, 0.3, 1, PlaneKind::BridgeB, 1e-8, 1e8);
    CHECK(b.value > 0.0);
    CHECK(!b.heuristic);
    // undamped driftless endpoint series diverges outright
    auto bern = bernoulli_potential(0.5, 1.0);
    CHECK_THROWS_AS(truncated_point_to_plane(cfg, bern, 0.0, 1, PlaneKind::EndpointG,
                                             1e-6, 1e7),
                    std::invalid_argument);
    // disorder damps it, but without drift only the heuristic stop applies
    auto g = truncated_point_to_plane(cfg, bern, 0.3, 1, PlaneKind::EndpointG, 2.0, 1e7);
    CHECK(g.heuristic);
    CHECK(g.engine == "dfs-heuristic");
    CHECK(g.value > 0.0);
}

TEST_CASE("unreachable tolerances raise the typed error with its best tail") {
    WalkConfig cfg{2, 1.0};
    auto bern = bernoulli_potential(0.5, 1.0);
    CHECK_THROWS_AS(truncated_point_to_plane(cfg, bern, 0.3, 1, PlaneKind::BridgeB,
                                             1e-14, 1e4),
                    ToleranceUnreachable);
    try {
        truncated_point_to_plane(cfg, bern, 0.3, 1, PlaneKind::BridgeB, 1e-14, 1e4);
    } catch (const ToleranceUnreachable& e) {
        CHECK(e.best_tail > 1e-14);
    }
}

TEST_CASE("bridge_span_series mirrors per-span plane sums") {
    WalkConfig cfg{2, 1.0};
    auto pm = point_mass_potential(0.5);
    const double beta = 0.3;
    auto bs = bridge_span_series(cfg, pm, beta, 3, 1e-9, 1e8);
    CHECK(!bs.heuristic);
    CHECK(bs.phi1 == doctest::Approx(phi(pm, beta, 1.0)).epsilon(1e-14));
    for (int L = 1; L <= 3; ++L) {
        auto b = truncated_point_to_plane(cfg, pm, beta, L, PlaneKind::BridgeB, 1e-9, 1e8);
        auto l = truncated_point_to_plane(cfg, pm, beta, L, PlaneKind::IrreducibleLambda,
                                          1e-9, 1e8);
        CHECK(bs.series.bridge(L) == doctest::Approx(b.value).epsilon(1e-7));
        CHECK(bs.series.irreducible(L) == doctest::Approx(l.value).epsilon(1e-7));
    }
}
