#include <cmath>
#include <limits>

#include "doctest.h"
#include "rwrp/stripchain.hpp"

using namespace rwrp;

namespace {
const WalkConfig kCfg4{4, 1.0};
const PotentialSpec kPm = point_mass_potential(0.1);
const double kBeta = 0.1;
}  // namespace

TEST_CASE("n_step_mass closed forms") {
    CHECK(n_step_mass(kCfg4, kPm, 0.0) == 0.0);
    CHECK(n_step_mass(kCfg4, kPm, kBeta) == doctest::Approx(kBeta * 0.1).epsilon(1e-14));
    auto bern = bernoulli_potential(0.5, 1.0);
    WalkConfig cfg2{2, 1.0};
    double m = n_step_mass(cfg2, bern, 0.3);
    CHECK(m > 0.0);
    CHECK(m < phi(bern, 0.3, 1.0) + 1e-12);  // per-site cost caps the rate
}

TEST_CASE("strip table entries are normalized and geometrically sane") {
    std::array<int, 8> dy{};
    auto tab = build_strip_table(kCfg4, kPm, kBeta, dy, 6);
    CHECK(tab.cutoff == 6);
    CHECK(!tab.far_class);
    CHECK(tab.captured > 0.4);
    CHECK(tab.captured <= 1.0 + 1e-12);
    REQUIRE(!tab.entries.empty());
    double sum = 0.0;
    for (const auto& e : tab.entries) {
        CHECK(e.p > 0.0);
        CHECK(e.zeta >= 0);
        CHECK(e.n1 + e.n2 <= 6);
        CHECK(e.n1 >= 1);
        CHECK(e.n2 >= 1);
        int l1 = 0;
        for (int a = 1; a < 4; ++a) l1 += std::abs(e.d_off[static_cast<std::size_t>(a)]);
        CHECK(l1 <= e.n1 + e.n2);
        sum += e.p;
    }
    CHECK(sum == doctest::Approx(tab.captured).epsilon(1e-12));
    REQUIRE(tab.cum.size() == tab.entries.size());
    CHECK(tab.cum.back() == doctest::Approx(tab.captured).epsilon(1e-12));

    // coincident columns can share sites; a separated class cannot meet
    std::array<int, 8> far{};
    far[1] = 9;
    auto faraway = build_strip_table(kCfg4, kPm, kBeta, far, 6);
    for (const auto& e : faraway.entries) CHECK(e.zeta == 0);
}

TEST_CASE("capture grows with the cutoff") {
    std::array<int, 8> dy{};
    double prev = 0.0;
    for (int cutoff : {2, 4, 6}) {
        auto tab = build_strip_table(kCfg4, kPm, kBeta, dy, cutoff);
        CHECK(tab.captured >= prev - 1e-12);
        prev = tab.captured;
    }
}

TEST_CASE("enumerated and sampled engines agree on the capture") {
    auto en = StripTableSet::enumerated(kCfg4, kPm, kBeta, 6);
    auto sa = StripTableSet::sampled(kCfg4, kPm, kBeta, 8, 6);
    CHECK(en.capture() == doctest::Approx(0.513157165040).epsilon(1e-6));
    CHECK(sa.capture() == doctest::Approx(en.capture()).epsilon(1e-9));
    CHECK(en.cutoff() == 6);
    CHECK(sa.cutoff() == 6);
    CHECK(en.dim() == 4);
    CHECK(en.rho_cap() == 8.0);
    CHECK(sa.rho_cap() == 8.0);
    CHECK(en.phi1() == doctest::Approx(phi(kPm, kBeta, 1.0)).epsilon(1e-14));
    CHECK(en.m_hat() == doctest::Approx(kBeta * 0.1).epsilon(1e-14));
}

TEST_CASE("unknown draw value is finite for tilted chains, 1 at zero tilt") {
    auto flat = StripTableSet::sampled(kCfg4, point_mass_potential(0.0), 0.0, 6, 8);
    CHECK(flat.unknown_value() == doctest::Approx(1.0).epsilon(1e-12));
    auto sa = StripTableSet::sampled(kCfg4, kPm, kBeta, 8, 12);
    CHECK(std::isfinite(sa.unknown_value()));
    CHECK(sa.unknown_value() >= 1.0);
}

TEST_CASE("sampled engine rejects potentials without an exact tilt") {
    auto bern = bernoulli_potential(0.5, 1.0);
    CHECK_THROWS_AS(StripTableSet::sampled(WalkConfig{2, 1.0}, bern, 0.3, 6, 8),
                    std::invalid_argument);
    // the enumerated engine accepts them
    auto en = StripTableSet::enumerated(WalkConfig{2, 1.0}, bern, 0.3, 6);
    CHECK(en.capture() > 0.0);
    CHECK(std::isinf(en.unknown_value()));  // slope-fit tilt has no safe bound
}

TEST_CASE("draws replay deterministically and land in the table") {
    auto sa = StripTableSet::sampled(kCfg4, kPm, kBeta, 8, 12);
    std::array<int, 8> delta{};
    RngStream r1(21, 0x55), r2(21, 0x55);
    for (int i = 0; i < 200; ++i) {
        StripDraw a, b;
        bool ka = sa.draw(delta, r1, &a);
        bool kb = sa.draw(delta, r2, &b);
        CHECK(ka == kb);
        if (ka) {
            CHECK(a.n1 == b.n1);
            CHECK(a.n2 == b.n2);
            CHECK(a.zeta == b.zeta);
            CHECK(a.d_off == b.d_off);
            CHECK(a.n1 + a.n2 <= 12);
        }
    }
}

TEST_CASE("sigma chain simulation contracts on the reference fixture") {
    auto sa = StripTableSet::sampled(kCfg4, kPm, kBeta, 8, 40);
    auto st = simulate_sigma_chain(sa, 3000, 400, RngStream(13, 0x56), 0.05);
    CHECK(st.n_runs == 3000);
    CHECK(st.contraction > 0.0);
    CHECK(st.contraction < 1.0);
    CHECK(st.contraction_ci_hi ==
          doctest::Approx(st.contraction + 1.96 * st.contraction_se).epsilon(1e-12));
    CHECK(st.rho_cap == 42.0);
    CHECK(st.p_sigma1 > 0.0);
    CHECK(st.p_sigma1 <= 1.0);
    CHECK(st.residual_frac >= 0.0);
    CHECK(st.conservative_upper >= st.contraction_ci_hi - 1e-12);
    REQUIRE(!st.sigma1_pmf.empty());
    double pmf_sum = 0.0;
    for (double p : st.sigma1_pmf) pmf_sum += p;
    CHECK(pmf_sum <= 1.0 + 1e-9);

    // bitwise replay
    auto sa2 = StripTableSet::sampled(kCfg4, kPm, kBeta, 8, 40);
    auto st2 = simulate_sigma_chain(sa2, 3000, 400, RngStream(13, 0x56), 0.05);
    CHECK(st2.contraction == st.contraction);
    CHECK(st2.p_sigma1 == st.p_sigma1);
}

TEST_CASE("simulation guards degenerate horizons and sparse captures") {
    auto sa = StripTableSet::sampled(kCfg4, kPm, kBeta, 8, 40);
    auto st = simulate_sigma_chain(sa, 50, 0, RngStream(13, 0x57), 0.05);
    CHECK(st.residual_frac == 1.0);
    CHECK(st.p_sigma1 == 0.0);

    auto coarse = StripTableSet::sampled(kCfg4, kPm, kBeta, 4, 4);
    CHECK_THROWS_AS(simulate_sigma_chain(coarse, 100, 100, RngStream(13, 0x58), 1e-6),
                    std::invalid_argument);
}

TEST_CASE("pathwise strip inequality holds on enumerated pairs") {
    std::array<int, 8> dy{};
    auto rep = strip_inequality_check(WalkConfig{2, 1.0}, bernoulli_potential(0.5, 1.0),
                                      0.3, 5, 5, dy, 1e8);
    CHECK(rep.pairs_checked > 0);
    CHECK(rep.violations == 0);
    CHECK(rep.max_log_excess <= 1e-10);
}
