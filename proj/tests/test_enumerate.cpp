#include <array>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rwrp/enumerate.hpp"
#include "rwrp/rng.hpp"

using namespace rwrp;

namespace {
const double kBudget = 1e8;
const PotentialSpec kExp = exponential_potential();
}  // namespace

TEST_CASE("enumerate_paths visits every path exactly once") {
    WalkConfig cfg{2, 0.7};
    long long n_paths = 0;
    double wsum = 0.0;
    enumerate_paths(cfg, 3, kBudget, [&](double w, const Path& p, const LocalTimeField& lt) {
        ++n_paths;
        wsum += w;
        CHECK(p.length() == 3);
        CHECK(lt.total() == 3);
        CHECK(lt.range_size() >= 1);
        CHECK(lt.range_size() <= 3);
    });
    CHECK(n_paths == 64);
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact_G small closed forms") {
    WalkConfig cfg{1, 0.0};
    CHECK(exact_G(cfg, kExp, 1.0, 1, kBudget) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(exact_G(cfg, kExp, 1.0, 2, kBudget) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(exact_G(cfg, kExp, 1.0, 3, kBudget) == doctest::Approx(7.0 / 48.0).epsilon(1e-13));
    // beta = 0: weights sum to one regardless of dimension or drift
    CHECK(exact_G(WalkConfig{2, 1.0}, kExp, 0.0, 5, kBudget) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(exact_G(cfg, kExp, 1.0, 0, kBudget) == 1.0);
}

TEST_CASE("bridge spectrum is consistent with exact_B and exact_G") {
    WalkConfig cfg{2, 1.0};
    const int N = 6;
    auto sp = exact_bridge_spectrum(cfg, kExp, 1.0, N, kBudget);
    REQUIRE(static_cast<int>(sp.by_span.size()) == N + 1);
    double sum = std::accumulate(sp.by_span.begin(), sp.by_span.end(), 0.0);
    CHECK(sp.total == doctest::Approx(sum).epsilon(1e-13));
    CHECK(sp.total == doctest::Approx(exact_B(cfg, kExp, 1.0, N, kBudget)).epsilon(1e-13));
    CHECK(sp.total <= exact_G(cfg, kExp, 1.0, N, kBudget));
    CHECK(sp.by_span[0] == 0.0);  // N >= 1 bridges have span >= 1
    for (double v : sp.by_span) CHECK(v >= 0.0);

    // one-step hand value: the only bridge is the single forward step
    WalkConfig line{1, 0.5};
    auto law = step_law(line);
    auto one = exact_bridge_spectrum(line, kExp, 1.0, 1, kBudget);
    CHECK(one.total == doctest::Approx(law.p_plus * 0.5).epsilon(1e-13));
    CHECK(one.by_span[1] == doctest::Approx(one.total).epsilon(1e-15));
}

TEST_CASE("irreducible spectrum refines the bridge spectrum") {
    WalkConfig cfg{2, 1.0};
    const int N = 6;
    auto br = exact_bridge_spectrum(cfg, kExp, 0.8, N, kBudget);
    auto irr = exact_irreducible_spectrum(cfg, kExp, 0.8, N, kBudget);
    REQUIRE(irr.by_span.size() == br.by_span.size());
    for (std::size_t L = 0; L < br.by_span.size(); ++L)
        CHECK(irr.by_span[L] <= br.by_span[L] + 1e-15);
    // span-1 bridges are automatically irreducible
    CHECK(irr.by_span[1] == doctest::Approx(br.by_span[1]).epsilon(1e-13));
    CHECK(irr.total <= br.total);
    CHECK(irr.total > 0.0);
}

TEST_CASE("second moment via direct pairing and via path tables") {
    WalkConfig cfg{2, 1.0};
    const double beta = 0.5;
    const PotentialSpec bern = bernoulli_potential(0.5, 1.0);
    std::array<int, 8> dy{};
    double ez2 = exact_second_moment(cfg, bern, beta, 4, 4, dy, kBudget);
    double ez = exact_G(cfg, bern, beta, 4, kBudget);
    CHECK(ez2 >= ez * ez);  // Jensen

    auto t = build_path_table(cfg, 4, kBudget);
    CHECK(paired_second_moment(t, t, bern, beta) == doctest::Approx(ez2).epsilon(1e-12));

    std::array<int, 8> off{};
    off[1] = 1;
    double ez2_off = exact_second_moment(cfg, bern, beta, 4, 4, off, kBudget);
    auto t2 = build_path_table(cfg, 4, kBudget, false, off);
    CHECK(paired_second_moment(t, t2, bern, beta) == doctest::Approx(ez2_off).epsilon(1e-12));
    // separating the replicas can only reduce the overlap bonus
    CHECK(ez2_off <= ez2 + 1e-15);
    CHECK(ez2_off >= ez * ez - 1e-15);

    // beta = 0 pairs carry no energy at all
    CHECK(exact_second_moment(cfg, bern, 0.0, 3, 3, dy, kBudget) ==
          doctest::Approx(1.0).epsilon(1e-13));

    double cb = exact_pair_coupled_bridge(cfg, bern, beta, 4, 4, dy, kBudget);
    CHECK(cb > 0.0);
    CHECK(cb <= ez2);
}

TEST_CASE("restricted profile splits G by local-time norm") {
    WalkConfig cfg{2, 1.0};
    const double beta = 0.3;
    const PotentialSpec bern = bernoulli_potential(0.5, 1.0);
    const int N = 6;
    auto prof = restricted_profile(cfg, bern, beta, N, kBudget);
    REQUIRE(static_cast<int>(prof.size()) == N * N + 1);
    for (int s = 0; s < N; ++s) CHECK(prof[s] == 0.0);
    double g = exact_G(cfg, bern, beta, N, kBudget);
    CHECK(std::accumulate(prof.begin(), prof.end(), 0.0) ==
          doctest::Approx(g).epsilon(1e-12));
    CHECK(prof[N] == doctest::Approx(saw_weight_sum(cfg, bern, beta, N, kBudget))
                         .epsilon(1e-12));

    CHECK(exact_restricted_G(cfg, bern, beta, N, 1.0, kBudget) ==
          doctest::Approx(prof[N]).epsilon(1e-13));
    CHECK(exact_restricted_G(cfg, bern, beta, N, 0.5, kBudget) == 0.0);
    CHECK(exact_restricted_G(cfg, bern, beta, N, N, kBudget) ==
          doctest::Approx(g).epsilon(1e-13));
    double prev = 0.0;
    for (int k = 1; k <= N; ++k) {
        double v = exact_restricted_G(cfg, bern, beta, N, k, kBudget);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
}

TEST_CASE("self-avoiding counts match known values") {
    CHECK(saw_count(2, 0, kBudget) == 1);
    CHECK(saw_count(2, 1, kBudget) == 4);
    CHECK(saw_count(2, 2, kBudget) == 12);
    CHECK(saw_count(2, 3, kBudget) == 36);
    CHECK(saw_count(2, 4, kBudget) == 100);
    CHECK(saw_count(1, 3, kBudget) == 2);
}

TEST_CASE("path table evaluates environments and the annealed average") {
    WalkConfig cfg{2, 1.0};
    const double beta = 0.5;
    const PotentialSpec bern = bernoulli_potential(0.5, 1.0);
    auto t = build_path_table(cfg, 4, kBudget);
    CHECK(static_cast<int>(t.entries.size()) == 256);
    for (const auto& e : t.entries) {
        CHECK(e.weight > 0.0);
        for (std::size_t i = 1; i < e.sites.size(); ++i)
            CHECK(e.sites[i - 1].first < e.sites[i].first);
    }

    double g = exact_G(cfg, bern, beta, 4, kBudget);
    CHECK(annealed_partition(t, bern, beta) == doctest::Approx(g).epsilon(1e-12));

    // empirical environment average of Z reproduces E Z
    const int n_envs = 4000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n_envs; ++i) {
        Environment env{bern, RngStream(77, 0xE17).at(static_cast<uint64_t>(i))};
        double z = quenched_partition(t, env, beta);
        double delta = z - mean;
        mean += delta / (i + 1);
        m2 += delta * (z - mean);
    }
    double se = std::sqrt(m2 / n_envs / (n_envs - 1));
    CHECK(std::fabs(mean - g) <= 5.0 * se + 1e-12);

    auto tb = build_path_table(cfg, 4, kBudget, true);
    CHECK(tb.entries.size() < t.entries.size());
    for (const auto& e : tb.entries) CHECK(e.span >= 1);
    CHECK(annealed_partition(tb, bern, beta) ==
          doctest::Approx(exact_B(cfg, bern, beta, 4, kBudget)).epsilon(1e-12));
}

TEST_CASE("budget guard rejects oversized enumerations up front") {
    WalkConfig cfg{2, 0.0};
    CHECK_THROWS_AS(exact_G(cfg, kExp, 1.0, 16, 1e3), BudgetExceeded);
    try {
        exact_G(cfg, kExp, 1.0, 16, 1e3);
    } catch (const BudgetExceeded& e) {
        CHECK(e.estimated > e.budget);
        CHECK(e.budget == 1e3);
    }
}
