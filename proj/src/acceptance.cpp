#include "rwrp/acceptance.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "rwrp/bridges.hpp"
#include "rwrp/enumerate.hpp"
#include "rwrp/fit.hpp"
#include "rwrp/montecarlo.hpp"
#include "rwrp/projection.hpp"
#include "rwrp/renewal.hpp"
#include "rwrp/rng.hpp"
#include "rwrp/stripchain.hpp"

namespace rwrp {

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string strf(const char* f, ...) {
    char b[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(b, sizeof b, f, ap);
    va_end(ap);
    return b;
}

struct Gate {
    int fails = 0;
    void line(int idx, const char* name, bool ok, const std::string& detail) {
        std::printf("C%02d %-22s %s%s%s\n", idx, name, ok ? "PASS" : "FAIL",
                    detail.empty() ? "" : "  ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++fails;
    }
    template <class F>
    void criterion(int idx, const char* name, F&& body) {
        try {
            auto [ok, detail] = body();
            line(idx, name, ok, detail);
        } catch (const std::exception& e) {
            line(idx, name, false, std::string("exception: ") + e.what());
        }
    }
};

using Result = std::pair<bool, std::string>;

constexpr uint64_t kSeed = 1;

// ---- C1: hitting probability e^{-2Lh}, MC against closed form ----------

Result c1_hitting() {
    bool ok = true;
    double slowest = 0.0, worst = 0.0;
    for (int d : {1, 2, 3})
        for (double h : {0.5, 1.0})
            for (int L : {1, 2}) {
                double t0 = now_s();
                WalkConfig w{d, h};
                HitEstimate e = mc_hit_frequency(
                    w, L, 1000000,
                    RngStream(kSeed, 0xA1).derive(uint64_t(d * 100 + L * 10) +
                                                  uint64_t(h * 2)),
                    1e-5);
                double exact = hitting_prob_neg(w, L);
                double tol = std::max(3.0 * e.stderr_, 5e-3) + e.residual;
                double dev = std::fabs(e.freq - exact);
                double dt = now_s() - t0;
                slowest = std::max(slowest, dt);
                worst = std::max(worst, dev / tol);
                if (dev > tol || dt > 60.0) ok = false;
            }
    return {ok, strf("12 points, worst dev %.2f of tol, slowest %.1f s", worst,
                     slowest)};
}

// ---- C2: level-0 return series reciprocal equals the escape rate -------

Result c2_reciprocal() {
    double t0 = now_s();
    bool ok = true;
    double worst = 0.0;
    for (int d : {1, 2, 3})
        for (double h : {0.5, 1.0}) {
            WalkConfig w{d, h};
            double alpha = escape_prob(w);
            TruncatedSum ts;
            int M = 64;
            for (;;) {
                ts = green_sum(w, M);
                if (ts.tail <= 1e-10 || M > (1 << 20)) break;
                M *= 2;
            }
            double dev = std::fabs(1.0 / ts.value - alpha);
            worst = std::max(worst, dev);
            if (dev > 1e-8 || ts.tail > 1e-10) ok = false;
        }
    double dt = now_s() - t0;
    if (dt > 1.0) ok = false;
    return {ok, strf("6 points, worst |1/S - alpha| %.2e, %.3f s", worst, dt)};
}

// ---- C3: hand-computed oracle fixtures ---------------------------------

Result c3_oracles() {
    bool ok = true;
    std::string note;
    double g = exact_G(WalkConfig{1, 0.0}, exponential_potential(), 1.0, 3, 1e6);
    if (std::fabs(g - 7.0 / 48.0) > 1e-12) {
        ok = false;
        note += strf(" endpoint sum %.17g != %.17g;", g, 7.0 / 48.0);
    }
    WalkConfig w1{1, 1.0};
    StepLaw l1 = step_law(w1);
    PotentialSpec ex = exponential_potential();
    double b2 = exact_B(w1, ex, 1.0, 2, 1e6);
    double b2ref = l1.p_plus * l1.p_plus * std::exp(-2.0 * phi(ex, 1.0, 1.0));
    if (std::fabs(b2 - b2ref) > 1e-12) {
        ok = false;
        note += strf(" bridge %.17g != %.17g;", b2, b2ref);
    }
    std::vector<int> word{0, 1, 2, 1, 2, 3};  // + + - + +
    auto brk = breaking_points({word});
    if (brk != std::vector<int>{2, 3}) {
        ok = false;
        note += " breaking points off;";
    }
    auto bts = backtracks(word);
    bool bt = bts.size() == 1 && bts[0].span == 1 && bts[0].covered == 0x1ull &&
              bts[0].m == 2 && bts[0].n == 3;
    if (!bt) {
        ok = false;
        note += strf(" backtracks %zu;", bts.size());
    }
    return {ok, ok ? "endpoint 7/48, two-step bridge, word fixtures" : note};
}

// ---- C4: pathwise energy bounds on a full enumeration ------------------

Result c4_pathwise() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec ex = exponential_potential();
    const double beta = 1.0;
    const int N = 10;
    double phitab[11];
    phitab[0] = 0.0;
    for (int t = 1; t <= N; ++t) phitab[t] = phi(ex, beta, double(t));
    const double phi1 = phitab[1];
    const double eps = 1e-12;

    long long paths = 0, viol = 0;
    enumerate_paths(w, N, 2e8, [&](double, const Path& p, const LocalTimeField&) {
        ++paths;
        // packed site at each time 0..N
        uint64_t key[N + 1];
        {
            std::array<int, 8> x = p.start;
            key[0] = pack_site(x.data(), p.d);
            for (int n = 1; n <= N; ++n) {
                int e = p.steps[size_t(n - 1)];
                x[e >> 1] += (e & 1) ? -1 : +1;
                key[n] = pack_site(x.data(), p.d);
            }
        }
        // window energies and distinct-site lists over (a, b]
        double Phi[N + 1][N + 1];
        uint64_t dst[N + 1][N + 1][N];
        int ndst[N + 1][N + 1];
        for (int a = 0; a <= N; ++a) {
            Phi[a][a] = 0.0;
            ndst[a][a] = 0;
            for (int b = a + 1; b <= N; ++b) {
                uint64_t s[N];
                int n = 0;
                for (int i = a + 1; i <= b; ++i) {
                    uint64_t k = key[i];
                    int j = n++;
                    while (j > 0 && s[j - 1] > k) {
                        s[j] = s[j - 1];
                        --j;
                    }
                    s[j] = k;
                }
                double acc = 0.0;
                int run = 1, nd = 0;
                for (int i = 1; i <= n; ++i) {
                    if (i < n && s[i] == s[i - 1]) {
                        ++run;
                    } else {
                        acc += phitab[run];
                        dst[a][b][nd++] = s[i - 1];
                        run = 1;
                    }
                }
                Phi[a][b] = acc;
                ndst[a][b] = nd;
            }
        }
        auto disjoint = [&](int a1, int b1, int a2, int b2) {
            const uint64_t* u = dst[a1][b1];
            const uint64_t* v = dst[a2][b2];
            int i = 0, j = 0, nu = ndst[a1][b1], nv = ndst[a2][b2];
            while (i < nu && j < nv) {
                if (u[i] < v[j])
                    ++i;
                else if (u[i] > v[j])
                    ++j;
                else
                    return false;
            }
            return true;
        };
        // (a) on every prefix
        for (int M = 0; M <= N; ++M)
            if (phi1 * ndst[0][M] > Phi[0][M] + eps ||
                Phi[0][M] > phi1 * M + eps)
                ++viol;
        // (b) subadditive split at every M, equality on disjoint ranges
        for (int M = 0; M <= N; ++M) {
            if (Phi[0][N] > Phi[0][M] + Phi[M][N] + eps) ++viol;
            if (disjoint(0, M, M, N) &&
                std::fabs(Phi[0][N] - Phi[0][M] - Phi[M][N]) > eps)
                ++viol;
        }
        // (c) window domination, two-sided split on disjoint ranges
        for (int M1 = 0; M1 <= N; ++M1)
            for (int M2 = M1; M2 <= N; ++M2) {
                if (Phi[0][N] < Phi[M1][M2] - eps) ++viol;
                if (disjoint(0, M1, M2, N) &&
                    Phi[0][N] < Phi[0][M1] + Phi[M2][N] - eps)
                    ++viol;
            }
    });
    // aggregate envelope e^{-phi1 N} <= G(N) <= 1 for every length
    bool genv = true;
    for (int n = 1; n <= N; ++n) {
        double g = exact_G(w, ex, beta, n, 2e8);
        if (g > 1.0 + 1e-12 || g < std::exp(-phi1 * n) - 1e-12) genv = false;
    }
    bool ok = viol == 0 && genv && paths == 1048576;
    return {ok, strf("%lld paths, %lld violations, envelope %s", paths, viol,
                     genv ? "ok" : "broken")};
}

// ---- C5: endpoint-sum subadditivity on all splits ----------------------

Result c5_subadditive() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec ex = exponential_potential();
    std::vector<double> G(13, 0.0);
    for (int n = 1; n <= 12; ++n) G[n] = exact_G(w, ex, 1.0, n, 2e8);
    double worst = 0.0;
    for (int m = 1; m <= 11; ++m)
        for (int n = 1; m + n <= 12; ++n)
            worst = std::max(worst,
                             std::log(G[m] * G[n]) - std::log(G[m + n]));
    return {worst <= 1e-12,
            strf("max log G(m)G(n)/G(m+n) = %.2e over 66 splits", worst)};
}

// ---- C6: renewal convolution residual, certified -----------------------

Result c6_renewal() {
    double t0 = now_s();
    const WalkConfig w{2, 1.0};
    const PotentialSpec pm = point_mass_potential(0.5);
    bool ok = true;
    double worst_res = 0.0, worst_slack = 0.0;
    for (int p : {1, 2})
        for (double beta : {0.0, 0.3})
            for (int L = 1; L <= 4; ++L) {
                RenewalResidual rr = renewal_residual(w, pm, beta, p, L, 1e8);
                worst_res = std::max(worst_res, rr.residual);
                worst_slack = std::max(worst_slack, rr.slack);
                if (rr.residual > rr.slack + 1e-12 || rr.slack > 1e-6)
                    ok = false;
            }
    double dt = now_s() - t0;
    if (dt > 300.0) ok = false;
    return {ok, strf("16 cases, max residual %.2e, max slack %.2e, %.1f s",
                     worst_res, worst_slack, dt)};
}

// ---- C7: renewal increment sequence is a probability law ---------------

Result c7_pi_sequence() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec pm = point_mass_potential(0.5);
    const int K = 24;
    PiSequence ps = pi_sequence(w, pm, 0.3, 1, K, 1e-8, 1e8);
    bool ok = int(ps.pi.size()) == K;
    double cum = 0.0, cum_km2 = 0.0;
    for (int k = 1; k <= K; ++k) {
        double pk = ps.pi[size_t(k - 1)];
        if (pk < -1e-15) ok = false;
        cum += pk;
        if (k == K - 2) cum_km2 = cum;
        if (cum > 1.0 + 1e-6) ok = false;
    }
    if (!(cum > cum_km2)) ok = false;
    for (size_t t = 1; t < ps.eps.size(); ++t)
        if (ps.eps[t] > ps.eps[t - 1] + 1e-15) ok = false;
    return {ok, strf("sum_24 = %.9f, mean = %.4f, eps monotone", cum, ps.mean)};
}

// ---- C8: irreducible-vs-bridge mass gap, CI excludes zero --------------

Result c8_mass_gap() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec pm = point_mass_potential(0.5);
    MassGap mg = mass_gap(w, pm, 0.3, 1, 1, 6, 1e8);
    bool ok = mg.gap > 0 && mg.gap - mg.ci95 > 0;
    return {ok, strf("gap %.4f, ci95 %.4f, window 1..6", mg.gap, mg.ci95)};
}

// ---- C9: second moment, environment MC vs exact pair enumeration -------

Result c9_second_moment() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec sp = bernoulli_potential(0.5, 1.0);
    const double beta = 0.5;
    const int N = 6;
    PathTable t = build_path_table(w, N, 1e8);
    double ez2 = exact_second_moment(w, sp, beta, N, N, {}, 1e8);
    double tab = paired_second_moment(t, t, sp, beta);
    RngStream seeds(kSeed, 0xA9);
    const long long n_envs = 10000;
    double mean = 0.0, m2 = 0.0;
    for (long long i = 0; i < n_envs; ++i) {
        Environment env{sp, seeds.at(uint64_t(i))};
        double z = quenched_partition(t, env, beta);
        double zz = z * z, d1 = zz - mean;
        mean += d1 / double(i + 1);
        m2 += d1 * (zz - mean);
    }
    double se = std::sqrt(m2 / double(n_envs - 1) / double(n_envs));
    bool ok = std::fabs(mean - ez2) <= 3.0 * se &&
              std::fabs(tab - ez2) <= 1e-10 * ez2;
    return {ok, strf("exact %.6g, mc %.6g +- %.2g (3 sigma)", ez2, mean, se)};
}

// ---- C10: second-moment ratio trend in N at small/large disorder -------

Result c10_ratio_trend() {
    const WalkConfig w{4, 1.0};
    const PotentialSpec ex = exponential_potential();
    const std::vector<int> grid{4, 8, 12, 16, 20};
    RatioCurve flat =
        mc_ratio_curve(w, ex, 0.1, grid, 100000, RngStream(kSeed, 0xA10F));
    RatioCurve grow =
        mc_ratio_curve(w, ex, 2.0, grid, 100000, RngStream(kSeed, 0xA106));
    double rise = flat.ratio.back() - flat.ratio.front();
    bool ok_flat = rise <= 0.05 * flat.ratio.front();
    bool ok_grow = grow.kendall_lo > 0;
    for (size_t i = 1; i < grow.ratio.size(); ++i)
        if (!(grow.ratio[i] > grow.ratio[i - 1])) ok_grow = false;
    return {ok_flat && ok_grow,
            strf("beta=0.1 rise %.3f%% of value; beta=2 increasing, "
                 "kendall >= %.2f",
                 100.0 * rise / flat.ratio.front(), grow.kendall_lo)};
}

// ---- C11: drift-gap prediction vs measured endpoint-sum mass -----------

Result c11_ballistic() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec pm = point_mass_potential(0.5);
    const double beta = 0.3;
    HBarSolution hb = solve_h_bar(w, pm, beta, 1e-4, 1e8);
    std::vector<double> xs, ys;
    for (int n = 8; n <= 12; ++n) {
        xs.push_back(double(n));
        ys.push_back(std::log(exact_G(w, pm, beta, n, 2e8)));
    }
    LineFit fit = fit_line(xs, ys);
    double m_fit = -fit.slope;
    double dev = std::fabs(m_fit - hb.gap_pred);
    return {dev <= 0.02, strf("slope-fit mass %.5f vs drift gap %.5f, |d| %.4f",
                              m_fit, hb.gap_pred, dev)};
}

// ---- C12: quenched/annealed rate deviation shrinks with N --------------

Result c12_coincidence() {
    const WalkConfig w{4, 1.0};
    const PotentialSpec sp = bernoulli_potential(0.5, 1.0);
    const std::vector<int> grid{8, 16, 24, 32};
    GapCurve gc = mc_free_energy_gap(w, sp, 0.1, grid, 4000, 200,
                                     RngStream(kSeed, 0xA12));
    size_t k = grid.size() - 1;
    double m_an = -(gc.log_g_hat[k] - gc.log_g_hat[k - 1]) /
                  double(grid[k] - grid[k - 1]);
    std::vector<double> dev;
    for (size_t i = 0; i < grid.size(); ++i)
        dev.push_back(std::fabs(gc.mean_log_zqu[i] / grid[i] + m_an));
    bool ok = true;
    for (size_t i = 1; i < dev.size(); ++i)
        if (!(dev[i] < dev[i - 1])) ok = false;
    for (double jg : gc.jensen_gap)
        if (jg < 0) ok = false;
    if (!gc.envelope_ok) ok = false;
    return {ok, strf("dev %.4f > %.4f > %.4f > %.4f, jensen >= 0, c %.3g",
                     dev[0], dev[1], dev[2], dev[3], gc.c_fit)};
}

// ---- C13: local-time-restricted partition sums -------------------------

Result c13_restricted() {
    const WalkConfig w{2, 1.0};
    const PotentialSpec sp = bernoulli_potential(0.5, 1.0);
    const double beta = 0.3;
    const int N = 10;
    double G = exact_G(w, sp, beta, N, 2e8);
    std::vector<double> prof = restricted_profile(w, sp, beta, N, 2e8);
    double tot = 0.0, wsum = 0.0;
    for (size_t s = 0; s < prof.size(); ++s) {
        tot += prof[s];
        wsum += double(s) * prof[s];
    }
    double saw = saw_weight_sum(w, sp, beta, N, 2e8);
    std::vector<double> vals(size_t(N) + 1, 0.0);
    bool ok = std::fabs(tot - G) <= 1e-10 * G;
    for (int kk = 1; kk <= N; ++kk) {
        vals[kk] = exact_restricted_G(w, sp, beta, N, kk, 2e8);
        if (kk > 1 && vals[kk] < vals[kk - 1] - 1e-12 * G) ok = false;
    }
    if (std::fabs(vals[N] - G) > 1e-12 * G) ok = false;
    if (std::fabs(vals[1] - saw) > 1e-12 * std::max(1.0, saw)) ok = false;
    int k_hat = std::max(1, int(std::ceil(2.0 * (wsum / tot) / N)));
    double gk = k_hat <= N ? vals[size_t(k_hat)] : G;
    if (!(gk > 0.5 * G)) ok = false;
    return {ok, strf("k_hat %d keeps %.3f of G, saw slice %.4g", k_hat, gk / G,
                     saw / G)};
}

// ---- C14: strip-chain contraction below one ----------------------------

Result c14_strip_chain() {
    const WalkConfig w{4, 1.0};
    const PotentialSpec pm = point_mass_potential(0.1);
    StripTableSet ts = StripTableSet::sampled(w, pm, 0.1, 12, 200);
    SigmaChainStats st = simulate_sigma_chain(ts, 20000, 2000,
                                              RngStream(kSeed, 0xA14), 0.01);
    bool ok = st.contraction_ci_hi < 1.0 && st.conservative_upper < 1.0 &&
              st.slope_ok;
    return {ok,
            strf("contraction %.4f (ci_hi %.4f, upper %.4f), slope %.2f+-%.2f",
                 st.contraction, st.contraction_ci_hi, st.conservative_upper,
                 st.tail_fit.slope, st.tail_fit.slope_stderr)};
}

}  // namespace

int run_acceptance() {
    Gate g;
    g.criterion(1, "hitting-identity", c1_hitting);
    g.criterion(2, "return-reciprocal", c2_reciprocal);
    g.criterion(3, "oracle-fixtures", c3_oracles);
    g.criterion(4, "pathwise-bounds", c4_pathwise);
    g.criterion(5, "subadditivity", c5_subadditive);
    g.criterion(6, "renewal-residual", c6_renewal);
    g.criterion(7, "pi-sequence", c7_pi_sequence);
    g.criterion(8, "mass-gap", c8_mass_gap);
    g.criterion(9, "second-moment", c9_second_moment);
    g.criterion(10, "ratio-trend", c10_ratio_trend);
    g.criterion(11, "ballistic-gap", c11_ballistic);
    g.criterion(12, "rate-coincidence", c12_coincidence);
    g.criterion(13, "restricted-sum", c13_restricted);
    g.criterion(14, "strip-contraction", c14_strip_chain);
    std::printf("%d/14 criteria passed\n", 14 - g.fails);
    return g.fails;
}

}  // namespace rwrp
