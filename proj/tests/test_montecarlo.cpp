#include <cmath>
#include <vector>

#include "doctest.h"
#include "rwrp/enumerate.hpp"
#include "rwrp/montecarlo.hpp"

using namespace rwrp;

namespace {
const WalkConfig kCfg{2, 1.0};
const PotentialSpec kBern = bernoulli_potential(0.5, 1.0);
}  // namespace

TEST_CASE("annealed sampler is exact at beta 0 and replays bitwise") {
    auto r0 = mc_annealed_Z(kCfg, kBern, 0.0, 6, 500, RngStream(9, 0x11));
    CHECK(r0.mean == 1.0);
    CHECK(r0.stderr_ == 0.0);
    CHECK(r0.n_samples == 500);

    auto a = mc_annealed_Z(kCfg, kBern, 0.5, 6, 2000, RngStream(9, 0x11));
    auto b = mc_annealed_Z(kCfg, kBern, 0.5, 6, 2000, RngStream(9, 0x11));
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.master_seed == 9);
    CHECK(a.stream_id == 0x11);
    CHECK(a.quantity == std::string("annealed_Z"));
}

TEST_CASE("annealed sampler agrees with exact enumeration") {
    WalkConfig line{1, 0.0};
    auto exp1 = exponential_potential();
    auto r = mc_annealed_Z(line, exp1, 1.0, 3, 40000, RngStream(5, 0x12));
    CHECK(std::fabs(r.mean - 7.0 / 48.0) <= 4.0 * r.stderr_ + 1e-12);

    double g = exact_G(kCfg, kBern, 0.5, 6, 1e8);
    auto r2 = mc_annealed_Z(kCfg, kBern, 0.5, 6, 40000, RngStream(5, 0x13));
    CHECK(std::fabs(r2.mean - g) <= 4.0 * r2.stderr_ + 1e-12);
}

TEST_CASE("common random numbers make the annealed mean monotone in beta") {
    double prev = 2.0;
    for (double beta : {0.0, 0.2, 0.4, 0.8}) {
        auto r = mc_annealed_Z(kCfg, kBern, beta, 6, 500, RngStream(3, 0x14));
        CHECK(r.mean <= prev + 1e-15);  // same paths, heavier damping
        prev = r.mean;
    }
}

TEST_CASE("quenched runs at a deterministic potential have zero spread") {
    auto pm = point_mass_potential(0.5);
    const double beta = 0.3;
    const int N = 6;
    auto q = mc_quenched_logZ(kCfg, pm, beta, N, 400, 50, RngStream(8, 0x15));
    // every path carries weight exp(-beta v N) regardless of the environment
    CHECK(q.mean_log_z == doctest::Approx(-beta * 0.5 * N).epsilon(1e-12));
    CHECK(q.se_log_z <= 1e-14);
    CHECK(q.jensen_gap >= 0.0);
    CHECK(q.jensen_gap <= 1e-12);
    CHECK(q.n_envs == 50);
    REQUIRE(q.z_hat.size() == 50);
    REQUIRE(q.log_z.size() == 50);
}

TEST_CASE("quenched run satisfies Jensen exactly and replays") {
    auto q1 = mc_quenched_logZ(kCfg, kBern, 0.5, 6, 300, 40, RngStream(8, 0x16));
    auto q2 = mc_quenched_logZ(kCfg, kBern, 0.5, 6, 300, 40, RngStream(8, 0x16));
    CHECK(q1.mean_log_z == q2.mean_log_z);
    CHECK(q1.mean_z == q2.mean_z);
    CHECK(q1.jensen_gap >= 0.0);
    CHECK(q1.jensen_gap ==
          doctest::Approx(std::log(q1.mean_z) - q1.mean_log_z).epsilon(1e-12));
    CHECK(q1.se_log_z > 0.0);
}

TEST_CASE("second-moment ratio respects Jensen and replica separation") {
    std::array<int, 8> dy{};
    auto r = mc_second_moment_ratio(kCfg, kBern, 0.5, 6, 20000, dy, RngStream(4, 0x17));
    CHECK(r.mean >= 1.0 - 4.0 * r.stderr_);
    CHECK(r.stderr_ > 0.0);

    std::array<int, 8> off{};
    off[1] = 3;
    auto ro = mc_second_moment_ratio(kCfg, kBern, 0.5, 6, 20000, off, RngStream(4, 0x17));
    // separated replicas overlap less, so the same pairs give a smaller ratio
    CHECK(ro.mean <= r.mean + 1e-15);

    auto r2 = mc_second_moment_ratio(kCfg, kBern, 0.5, 6, 20000, dy, RngStream(4, 0x17));
    CHECK(r2.mean == r.mean);
}

TEST_CASE("ratio curve shapes, rank correlation, and replay") {
    std::vector<int> grid{2, 4, 6, 8};
    auto rc = mc_ratio_curve(kCfg, kBern, 0.8, grid, 4000, RngStream(6, 0x18));
    REQUIRE(rc.grid == grid);
    REQUIRE(rc.ratio.size() == grid.size());
    REQUIRE(rc.stderr_.size() == grid.size());
    for (double v : rc.ratio) CHECK(v >= 0.9);
    CHECK(rc.kendall >= -1.0);
    CHECK(rc.kendall <= 1.0);
    CHECK(rc.kendall_lo <= rc.kendall + 1e-12);
    CHECK(rc.kendall_hi >= rc.kendall - 1e-12);
    CHECK(rc.n_pairs == 4000);

    auto rc2 = mc_ratio_curve(kCfg, kBern, 0.8, grid, 4000, RngStream(6, 0x18));
    CHECK(rc2.ratio == rc.ratio);
    CHECK(rc2.kendall == rc.kendall);
}

TEST_CASE("free-energy gap curve is nonnegative with a valid envelope") {
    std::vector<int> grid{4, 8, 12};
    auto gc = mc_free_energy_gap(kCfg, kBern, 0.5, grid, 400, 60, RngStream(7, 0x19));
    REQUIRE(gc.grid == grid);
    REQUIRE(gc.gap.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(gc.gap[i] >= 0.0);
        CHECK(gc.gap_se[i] >= 0.0);
        CHECK(gc.jensen_gap[i] >= 0.0);
        CHECK(gc.mean_log_zqu[i] <= gc.log_g_hat[i] + 1e-12);
    }
    CHECK(gc.c_fit > 0.0);
    CHECK(gc.envelope_ok);  // c_fit is defined as the smallest valid envelope
    // the envelope at c_fit is tight somewhere
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, gc.gap[i] / (1.0 + 0.5 * std::sqrt(grid[i])));
    CHECK(gc.c_fit == doctest::Approx(worst).epsilon(1e-10));
}

TEST_CASE("Paley-Zygmund bound holds with exact moments") {
    auto pz = paley_zygmund_check(kCfg, kBern, 0.5, 5, 3000, RngStream(2, 0x1A));
    CHECK(pz.ez_exact == doctest::Approx(exact_G(kCfg, kBern, 0.5, 5, 1e8)).epsilon(1e-12));
    std::array<int, 8> dy{};
    CHECK(pz.ez2_exact ==
          doctest::Approx(exact_second_moment(kCfg, kBern, 0.5, 5, 5, dy, 1e8))
              .epsilon(1e-12));
    CHECK(pz.n_envs == 3000);
    CHECK(pz.p_emp >= 0.0);
    CHECK(pz.p_emp <= 1.0);
    CHECK(pz.ok);
}

TEST_CASE("concentration check accepts bounded potentials only") {
    auto cr = concentration_check(kCfg, kBern, 0.3, 2.0, 6, 1500, RngStream(1, 0x1B));
    CHECK(cr.ok);
    CHECK(cr.violations == 0);
    CHECK(cr.v_bar == doctest::Approx(1.0).epsilon(1e-12));  // ess sup of the value
    REQUIRE(!cr.t_grid.empty());
    REQUIRE(cr.emp_tail.size() == cr.t_grid.size());
    for (std::size_t i = 0; i < cr.t_grid.size(); ++i) {
        CHECK(cr.emp_tail[i] >= 0.0);
        CHECK(cr.emp_tail[i] <= 1.0);
        CHECK(cr.bound[i] > 0.0);
    }

    CHECK_THROWS_AS(concentration_check(kCfg, kBern, 0.3, 0.5, 6, 100, RngStream(1, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(concentration_check(kCfg, exponential_potential(), 0.3, 2.0, 6, 100,
                                        RngStream(1, 1)),
                    std::invalid_argument);
}
