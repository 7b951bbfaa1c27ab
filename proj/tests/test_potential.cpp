#include <cmath>
#include <limits>

#include "doctest.h"
#include "rwrp/potential.hpp"
#include "rwrp/rng.hpp"
#include "rwrp/walk.hpp"

using namespace rwrp;

TEST_CASE("transform closed forms") {
    PotentialSpec ex = exponential_potential();
    CHECK(phi_raw(ex, 0.0) == 0.0);
    CHECK(phi_raw(ex, 3.0) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    PotentialSpec be = bernoulli_potential(0.3, 2.0);
    CHECK(phi_raw(be, 1.5) ==
          doctest::Approx(-std::log(0.7 + 0.3 * std::exp(-3.0))).epsilon(1e-14));
    PotentialSpec pm = point_mass_potential(0.4);
    CHECK(phi_raw(pm, 2.5) == doctest::Approx(1.0).epsilon(1e-15));
    PotentialSpec tr = trap_limit_potential(1.7);
    CHECK(phi_raw(tr, 0.0) == 0.0);
    CHECK(phi_raw(tr, 1e-9) == 1.7);
    PotentialSpec tb = tabulated_potential({{0, 0}, {1, 0.5}, {3, 0.9}});
    CHECK(phi_raw(tb, 0.5) == doctest::Approx(0.25));
    CHECK(phi_raw(tb, 2.0) == doctest::Approx(0.7));
    CHECK(phi_raw(tb, 5.0) == doctest::Approx(0.9 + 0.2 * 2.0));
    CHECK(phi(be, 0.5, 3.0) == doctest::Approx(phi_raw(be, 1.5)).epsilon(1e-15));
}

TEST_CASE("transform rejects bad arguments") {
    CHECK_THROWS_AS(phi_raw(exponential_potential(), -0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(phi(exponential_potential(), -1.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(bernoulli_potential(1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(trap_limit_potential(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(tabulated_potential({{0.5, 0.1}, {1, 0.2}}),
                    std::invalid_argument);
}

TEST_CASE("assumption probe accepts the standard laws") {
    CHECK(validate_spec(exponential_potential()).ok);
    CHECK(validate_spec(exponential_potential()).phi_unbounded);
    CHECK(validate_spec(bernoulli_potential(0.5, 1.0)).ok);
    CHECK(validate_spec(point_mass_potential(0.5)).ok);
    PotentialValidation tr = validate_spec(trap_limit_potential(1.0));
    CHECK(tr.ok);
    CHECK(!tr.phi_unbounded);
}

TEST_CASE("essential supremum of the site law") {
    CHECK(ess_sup_v(bernoulli_potential(0.5, 2.0)) == 2.0);
    CHECK(ess_sup_v(point_mass_potential(0.3)) == 0.3);
    CHECK(std::isinf(ess_sup_v(exponential_potential())));
}

TEST_CASE("environments are site-deterministic with the right margins") {
    Environment be{bernoulli_potential(0.5, 2.0), 77};
    long long hits = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        double v = be.value(uint64_t(i) * 2654435761u);
        CHECK((v == 0.0 || v == 2.0));
        if (v == 2.0) ++hits;
        CHECK(be.value(uint64_t(i) * 2654435761u) == v);
    }
    CHECK(std::fabs(hits / double(n) - 0.5) < 0.02);

    Environment exe{exponential_potential(), 78};
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = exe.value(mix64(uint64_t(i)));
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(std::fabs(sum / n - 1.0) < 0.05);

    Environment pme{point_mass_potential(0.4), 79};
    CHECK(pme.value(123) == 0.4);
    CHECK(pme.value(456) == 0.4);
}

TEST_CASE("window energies agree with hand counts") {
    Path p;
    p.d = 2;
    p.steps = {0, 1};  // +x then -x: sites (1,0) and (0,0), one visit each
    PotentialSpec be = bernoulli_potential(0.5, 1.0);
    double beta = 0.7;
    CHECK(annealed_energy(p, be, beta) ==
          doctest::Approx(2.0 * phi(be, beta, 1.0)).epsilon(1e-14));
    CHECK(annealed_energy(p, be, beta, 1, 2) ==
          doctest::Approx(phi(be, beta, 1.0)).epsilon(1e-14));
    Environment env{be, 5};
    int x1[8] = {1, 0}, x0[8] = {0, 0};
    double expect =
        beta * (env.value(pack_site(x1, 2)) + env.value(pack_site(x0, 2)));
    CHECK(quenched_energy(p, env, beta) == doctest::Approx(expect));
}

TEST_CASE("coupled energy and overlap on coincident and split pairs") {
    Path p;
    p.d = 2;
    p.steps = {0, 1};
    PotentialSpec be = bernoulli_potential(0.5, 1.0);
    double beta = 0.7;
    // identical replicas: both sites carry joint local time 2
    CHECK(coupled_energy(p, p, be, beta) ==
          doctest::Approx(2.0 * phi(be, beta, 2.0)).epsilon(1e-14));
    OverlapStats ov = overlap_stats(p, p, be, beta);
    CHECK(ov.l_overlap == 4);
    CHECK(ov.psi == doctest::Approx(4.0 * phi(be, beta, 1.0) -
                                    2.0 * phi(be, beta, 2.0)));
    CHECK(ov.psi >= 0.0);
    // pushed far apart in y: supports disjoint, energies add
    std::array<int, 8> dy{};
    dy[1] = 5;
    CHECK(coupled_energy(p, p, be, beta, dy) ==
          doctest::Approx(4.0 * phi(be, beta, 1.0)).epsilon(1e-14));
    OverlapStats far = overlap_stats(p, p, be, beta, dy);
    CHECK(far.l_overlap == 0);
    CHECK(far.psi == doctest::Approx(0.0));
}
