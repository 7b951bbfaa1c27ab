#include "rwrp/expcli.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

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

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string num17(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

std::string num12(double x) {
    char b[48];
    std::snprintf(b, sizeof b, "%.12g", x);
    return b;
}

std::string strf(const char* f, ...) {
    char b[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(b, sizeof b, f, ap);
    va_end(ap);
    return b;
}

const char* kind_name(PotentialKind k) {
    switch (k) {
        case PotentialKind::Bernoulli: return "bernoulli";
        case PotentialKind::ExponentialMean1: return "exponential_mean1";
        case PotentialKind::PointMass: return "point_mass";
        case PotentialKind::TrapLimit: return "trap_limit";
        case PotentialKind::Tabulated: return "tabulated";
    }
    return "?";
}

[[noreturn]] void bad(const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
}

PotentialKind kind_from(const std::string& s) {
    for (PotentialKind k :
         {PotentialKind::Bernoulli, PotentialKind::ExponentialMean1,
          PotentialKind::PointMass, PotentialKind::TrapLimit,
          PotentialKind::Tabulated})
        if (s == kind_name(k)) return k;
    bad("potential.kind '" + s + "' is not recognized");
}

// ---- strict JSON helpers ------------------------------------------------

double as_num(const json& v, const std::string& path) {
    if (!v.is_number()) bad(path + " must be a number");
    return v.get<double>();
}

long long as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) bad(path + " must be an integer");
    return v.get<long long>();
}

std::string as_str(const json& v, const std::string& path) {
    if (!v.is_string()) bad(path + " must be a string");
    return v.get<std::string>();
}

std::vector<double> as_num_list(const json& v, const std::string& path) {
    if (!v.is_array()) bad(path + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_num(e, path + "[]"));
    return out;
}

std::vector<long long> as_int_list(const json& v, const std::string& path) {
    if (!v.is_array()) bad(path + " must be an array of integers");
    std::vector<long long> out;
    for (const auto& e : v) out.push_back(as_int(e, path + "[]"));
    return out;
}

const json& need_object(const json& v, const std::string& path) {
    if (!v.is_object()) bad(path + " must be an object");
    return v;
}

// ---- run-record helpers -------------------------------------------------

void put(RunRecord& r, const std::string& key, double v) {
    r.scalars.emplace_back(key, v);
}

void check(RunRecord& r, const std::string& name, bool ok,
           const std::string& detail = "") {
    std::string line = name + ": " + (ok ? "PASS" : "FAIL");
    if (!detail.empty()) line += " (" + detail + ")";
    r.verdicts.push_back(line);
    if (!ok) r.pass = false;
}

void table(RunRecord& r, const std::string& name,
           std::vector<std::string> headers) {
    r.table_headers[name] = std::move(headers);
    r.tables[name];  // ensure present even if no rows follow
}

void row(RunRecord& r, const std::string& name, std::vector<double> vals) {
    r.tables[name].push_back(std::move(vals));
}

// fixed stream ids so experiments draw from disjoint counter families
constexpr uint64_t kStreamHit = 0x6869'7464'7276'0001ull;
constexpr uint64_t kStreamSecond = 0x7365'636d'6472'0002ull;
constexpr uint64_t kStreamSecondEnv = 0x7365'636d'656e'0003ull;
constexpr uint64_t kStreamGap = 0x6667'6170'6472'0004ull;
constexpr uint64_t kStreamConc = 0x636f'6e63'6472'0005ull;
constexpr uint64_t kStreamStrip = 0x7374'7263'6472'0006ull;

// ---- experiments --------------------------------------------------------

void run_hitting_identity(const ExperimentConfig& cfg, RunRecord& rec) {
    if (cfg.drift_h <= 0)
        throw std::invalid_argument(
            "hitting-identity needs drift_h > 0 (the identity is trivial or "
            "ill-posed otherwise)");
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    table(rec, "hitting", {"L", "exact", "mc_freq", "mc_se", "horizon",
                           "residual", "dp_freq"});
    for (int L = 1; L <= cfg.level_l; ++L) {
        double exact = hitting_prob_neg(w, L);
        HitEstimate est = mc_hit_frequency(
            w, L, cfg.n_samples, RngStream(cfg.master_seed, kStreamHit).derive(L),
            1e-5);
        double tol = std::max(3.0 * est.stderr_, cfg.slack) + est.residual;
        check(rec, strf("hit L=%d", L), std::fabs(est.freq - exact) <= tol,
              strf("|%.6g - %.6g| vs %.3g", est.freq, exact, tol));
        HitEstimate dp = dp_hit_probability(w, L);
        check(rec, strf("hit-dp L=%d", L),
              std::fabs(dp.freq - exact) <= dp.residual + 1e-12,
              strf("|%.12g - %.12g| vs %.3g", dp.freq, exact,
                   dp.residual + 1e-12));
        row(rec, "hitting", {double(L), exact, est.freq, est.stderr_,
                             double(est.horizon), est.residual, dp.freq});
    }
}

void run_green_identity(const ExperimentConfig& cfg, RunRecord& rec) {
    if (cfg.drift_h <= 0)
        throw std::invalid_argument("green-identity needs drift_h > 0");
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    StepLaw law = step_law(w);
    double alpha = escape_prob(w);
    double rho = chernoff_rho_min(w);
    table(rec, "green", {"L", "alpha", "partial_sum", "tail_bound", "horizon"});
    for (int L = 1; L <= cfg.level_l; ++L) {
        // horizon so the Chernoff tail e^{hL} rho^{M+1}/(1-rho) <= tol/2
        double need =
            (std::log(cfg.tol / 2.0 * (1.0 - rho)) - cfg.drift_h * L) /
            std::log(rho);
        int M = std::min(200000, std::max(L + 8, int(std::ceil(need))));
        double tail = std::exp(cfg.drift_h * L) * std::pow(rho, M + 1) /
                      (1.0 - rho);
        std::vector<double> v{1.0};  // P[S1(n) = s], index s + n
        double partial = 0.0;
        for (int n = 1; n <= M; ++n) {
            std::vector<double> nx(2 * n + 1, 0.0);
            for (int i = 0; i <= 2 * n; ++i) {
                double a = 0.0;
                if (i >= 2 && i - 2 < int(v.size())) a += law.proj_up() * v[i - 2];
                if (i < int(v.size())) a += law.proj_down() * v[i];
                if (i >= 1 && i - 1 < int(v.size())) a += law.proj_stay() * v[i - 1];
                nx[i] = a;
            }
            v.swap(nx);
            if (n >= L) partial += v[L + n];
        }
        double lo = alpha * partial, hi = alpha * (partial + tail);
        check(rec, strf("reciprocal L=%d", L),
              lo <= 1.0 + cfg.tol && 1.0 <= hi + cfg.tol,
              strf("alpha*sum in [%.12g, %.12g]", lo, hi));
        double closed = point_to_plane_gamma_closed(law, 1.0, L);
        check(rec, strf("closed-form L=%d", L),
              std::fabs(closed - 1.0 / alpha) <= 1e-9 / alpha &&
                  std::fabs(partial + tail - closed) <= tail + 1e-9,
              strf("closed %.12g vs 1/alpha %.12g", closed, 1.0 / alpha));
        row(rec, "green", {double(L), alpha, partial, tail, double(M)});
    }
    put(rec, "alpha", alpha);
    put(rec, "chernoff_rho", rho);
}

void run_oracle_fixtures(const ExperimentConfig& cfg, RunRecord& rec) {
    double budget = cfg.budget_nodes;
    // closed-form endpoint sum: driftless d=1, exponential disorder, 3 steps
    double g = exact_G(WalkConfig{1, 0.0}, exponential_potential(), 1.0, 3,
                       budget);
    check(rec, "endpoint-sum-closed-form", std::fabs(g - 7.0 / 48.0) <= 1e-12,
          strf("%.17g vs %.17g", g, 7.0 / 48.0));
    put(rec, "endpoint_sum", g);

    // two-step bridge in d=1 is the double up-step alone
    WalkConfig w1{1, 1.0};
    StepLaw l1 = step_law(w1);
    PotentialSpec ex = exponential_potential();
    double b2 = exact_B(w1, ex, 1.0, 2, budget);
    double b2_expect = l1.p_plus * l1.p_plus * std::exp(-2.0 * phi(ex, 1.0, 1.0));
    check(rec, "bridge-two-step", std::fabs(b2 - b2_expect) <= 1e-12,
          strf("%.17g vs %.17g", b2, b2_expect));
    put(rec, "bridge_two_step", b2);

    // covering / breaking on hand-checked height words
    std::vector<int> updownup{0, 1, 2, 1, 2};       // + + - +
    std::vector<int> word5{0, 1, 2, 1, 2, 3};       // + + - + +
    std::vector<int> stairs{0, 1, 2, 3};            // + + +
    check(rec, "covered-updownup", covered_levels(updownup) == 0x1ull,
          strf("mask %llx", (unsigned long long)covered_levels(updownup)));
    auto bts = backtracks(updownup);
    bool bt_ok = false;
    for (const auto& b : bts)
        if (b.span == 1 && b.covered == 0x1ull && b.m == 2 && b.n == 3)
            bt_ok = true;
    check(rec, "backtrack-span1", bt_ok && bts.size() == 1,
          strf("%zu backtracks", bts.size()));
    auto brk = breaking_points({word5});
    check(rec, "breaking-word5", brk == std::vector<int>{2, 3} &&
                                      covered_levels(word5) == 0x1ull &&
                                      !is_irreducible({word5}));
    auto brk3 = breaking_points({stairs});
    check(rec, "breaking-stairs",
          brk3 == std::vector<int>{1, 2, 3} && covered_levels(stairs) == 0 &&
              !is_irreducible({stairs}));
    check(rec, "irreducible-single-step",
          is_irreducible({std::vector<int>{0, 1}}));
}

void run_renewal(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    table(rec, "renewal", {"beta", "L", "residual", "slack_cert"});
    std::vector<double> betas{0.0};
    if (cfg.beta != 0.0) betas.push_back(cfg.beta);
    for (double b : betas)
        for (int L = 1; L <= cfg.level_l; ++L) {
            RenewalResidual rr =
                renewal_residual(w, cfg.potential, b, cfg.period_p, L,
                                 cfg.budget_nodes);
            check(rec, strf("renewal beta=%g L=%d", b, L),
                  rr.residual <= cfg.slack + rr.slack,
                  strf("residual %.3g vs %.3g", rr.residual,
                       cfg.slack + rr.slack));
            row(rec, "renewal", {b, double(L), rr.residual, rr.slack});
        }
}

void run_mass_gap(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    MassGap mg = mass_gap(w, cfg.potential, cfg.beta, cfg.period_p, 1,
                          cfg.span_window_l, cfg.budget_nodes);
    check(rec, "gap-positive", mg.gap > 0, strf("gap %.6g", mg.gap));
    check(rec, "gap-ci-excludes-zero", mg.gap - mg.ci95 > 0,
          strf("gap %.6g ci95 %.6g", mg.gap, mg.ci95));
    check(rec, "pointwise-domination", mg.pointwise_ok);
    check(rec, "envelope", mg.envelope_ok);
    if (mg.sandwich_checked) check(rec, "sandwich", mg.sandwich_ok);
    put(rec, "mass_B", mg.mB.m_hat);
    put(rec, "mass_Lambda", mg.mLambda.m_hat);
    put(rec, "gap", mg.gap);
    put(rec, "gap_ci95", mg.ci95);
    table(rec, "mass_gap", {"L", "Bbar", "Lambdabar", "slack_B", "slack_Lambda"});
    for (const auto& r : mg.rows)
        row(rec, "mass_gap",
            {double(r.L), r.Bbar, r.Lambdabar, r.slack_B, r.slack_Lambda});
}

void run_ballistic_consistency(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    HBarSolution hb =
        solve_h_bar(w, cfg.potential, cfg.beta, cfg.tol, cfg.budget_nodes);
    double diff = std::fabs(hb.mass_at_h - hb.gap_pred);
    check(rec, "mass-matches-drift-gap", diff <= cfg.slack,
          strf("|%.6g - %.6g| = %.3g vs %.3g", hb.mass_at_h, hb.gap_pred, diff,
               cfg.slack));
    put(rec, "h_bar", hb.h_bar);
    put(rec, "mass_at_h", hb.mass_at_h);
    put(rec, "gap_pred", hb.gap_pred);
    put(rec, "abs_diff", diff);
    put(rec, "iters", hb.iters);
}

void run_second_moment(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    int N = cfg.n_steps;
    PathTable t1 = build_path_table(w, N, cfg.budget_nodes);
    PathTable t2 = build_path_table(w, N, cfg.budget_nodes, false, cfg.offset_dy);
    double ez = annealed_partition(t1, cfg.potential, cfg.beta);
    double ez2_tab = paired_second_moment(t1, t2, cfg.potential, cfg.beta);
    double ez2 = exact_second_moment(w, cfg.potential, cfg.beta, N, N,
                                     cfg.offset_dy, cfg.budget_nodes);
    check(rec, "pair-table-vs-direct",
          std::fabs(ez2_tab - ez2) <= 1e-10 * std::max(1.0, std::fabs(ez2)),
          strf("%.12g vs %.12g", ez2_tab, ez2));

    // environment MC: Z exact per sampled environment, product across tables
    RngStream env_seeds(cfg.master_seed, kStreamSecondEnv);
    double mean = 0.0, m2 = 0.0;
    for (long long i = 0; i < cfg.n_envs; ++i) {
        Environment env{cfg.potential, env_seeds.at(uint64_t(i))};
        double z = quenched_partition(t1, env, cfg.beta) *
                   quenched_partition(t2, env, cfg.beta);
        double d1 = z - mean;
        mean += d1 / double(i + 1);
        m2 += d1 * (z - mean);
    }
    double se = cfg.n_envs > 1
                    ? std::sqrt(m2 / double(cfg.n_envs - 1) / double(cfg.n_envs))
                    : 0.0;
    check(rec, "env-mc-3sigma", std::fabs(mean - ez2) <= 3.0 * se,
          strf("|%.6g - %.6g| vs %.3g", mean, ez2, 3.0 * se));

    // path-pair MC of the normalized ratio as a second, independent estimator
    EstimateRecord pr =
        mc_second_moment_ratio(w, cfg.potential, cfg.beta, N, cfg.n_samples,
                               cfg.offset_dy, RngStream(cfg.master_seed,
                                                        kStreamSecond));
    double ratio = ez2 / (ez * ez);
    check(rec, "pair-mc-4sigma",
          std::fabs(pr.mean - ratio) <= 4.0 * pr.stderr_ + 1e-9,
          strf("%.6g vs %.6g (se %.2g)", pr.mean, ratio, pr.stderr_));

    put(rec, "ez", ez);
    put(rec, "ez2_exact", ez2);
    put(rec, "env_mc_mean", mean);
    put(rec, "env_mc_se", se);
    put(rec, "ratio_exact", ratio);
    put(rec, "ratio_mc", pr.mean);
    table(rec, "second_moment", {"n_envs", "exact", "mc_mean", "mc_se"});
    row(rec, "second_moment", {double(cfg.n_envs), ez2, mean, se});
}

void run_free_energy_gap(const ExperimentConfig& cfg, RunRecord& rec) {
    if (cfg.n_grid.size() < 2)
        throw std::invalid_argument(
            "free-energy-gap needs paths.n_grid with at least two lengths");
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    GapCurve gc = mc_free_energy_gap(w, cfg.potential, cfg.beta, cfg.n_grid,
                                     cfg.n_samples, cfg.n_envs,
                                     RngStream(cfg.master_seed, kStreamGap));
    bool jensen = true;
    for (double jg : gc.jensen_gap) jensen = jensen && jg >= 0.0;
    check(rec, "jensen-nonnegative", jensen);
    check(rec, "sqrtN-envelope", gc.envelope_ok,
          strf("c_fit %.4g", gc.c_fit));
    size_t k = gc.grid.size() - 1;
    double m_an = -(gc.log_g_hat[k] - gc.log_g_hat[k - 1]) /
                  double(gc.grid[k] - gc.grid[k - 1]);
    std::vector<double> dev;
    for (size_t i = 0; i < gc.grid.size(); ++i)
        dev.push_back(std::fabs(gc.mean_log_zqu[i] / gc.grid[i] + m_an));
    check(rec, "rate-deviation-shrinks", dev.back() <= dev.front(),
          strf("%.4g -> %.4g", dev.front(), dev.back()));
    put(rec, "m_an_hat", m_an);
    put(rec, "c_fit", gc.c_fit);
    table(rec, "free_energy_gap", {"N", "gap", "gap_se", "mean_log_zqu",
                                   "log_g_hat", "jensen_gap", "rate_dev"});
    for (size_t i = 0; i < gc.grid.size(); ++i)
        row(rec, "free_energy_gap",
            {double(gc.grid[i]), gc.gap[i], gc.gap_se[i], gc.mean_log_zqu[i],
             gc.log_g_hat[i], gc.jensen_gap[i], dev[i]});
}

void run_concentration(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    ConcReport cr = concentration_check(w, cfg.potential, cfg.beta,
                                        cfg.k_restrict_cap, cfg.n_steps,
                                        cfg.n_envs,
                                        RngStream(cfg.master_seed, kStreamConc));
    check(rec, "gaussian-envelope", cr.ok,
          strf("%d violations over %zu t", cr.violations, cr.t_grid.size()));
    put(rec, "median_logz", cr.median);
    put(rec, "v_bar", cr.v_bar);
    put(rec, "violations", cr.violations);
    table(rec, "concentration", {"t", "emp_tail", "emp_se", "bound"});
    for (size_t i = 0; i < cr.t_grid.size(); ++i)
        row(rec, "concentration",
            {cr.t_grid[i], cr.emp_tail[i], cr.emp_se[i], cr.bound[i]});
}

void run_restricted_partition(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    int N = cfg.n_steps;
    double budget = cfg.budget_nodes;
    double G = exact_G(w, cfg.potential, cfg.beta, N, budget);
    std::vector<double> prof =
        restricted_profile(w, cfg.potential, cfg.beta, N, budget);
    double tot = 0.0, wsum = 0.0;
    for (size_t s = 0; s < prof.size(); ++s) {
        tot += prof[s];
        wsum += double(s) * prof[s];
    }
    check(rec, "profile-sums-to-G", std::fabs(tot - G) <= 1e-10 * G,
          strf("%.12g vs %.12g", tot, G));
    double mean_ell2 = wsum / tot;
    double saw = saw_weight_sum(w, cfg.potential, cfg.beta, N, budget);

    table(rec, "restricted", {"k", "value", "ratio"});
    std::vector<double> vals(size_t(N) + 1, 0.0);
    bool monotone = true;
    for (int k = 1; k <= N; ++k) {
        vals[k] = exact_restricted_G(w, cfg.potential, cfg.beta, N, k, budget);
        if (k > 1 && vals[k] < vals[k - 1] - 1e-12 * G) monotone = false;
        row(rec, "restricted", {double(k), vals[k], vals[k] / G});
    }
    check(rec, "monotone-in-k", monotone);
    check(rec, "full-at-k=N", std::fabs(vals[N] - G) <= 1e-12 * std::max(1.0, G),
          strf("%.12g vs %.12g", vals[N], G));
    check(rec, "saw-slice-at-k=1",
          std::fabs(vals[1] - saw) <= 1e-12 * std::max(1.0, saw),
          strf("%.12g vs %.12g", vals[1], saw));
    int k_hat = std::max(1, int(std::ceil(2.0 * mean_ell2 / N)));
    double g_hat = k_hat <= N ? vals[k_hat] : G;
    check(rec, "bulk-below-k-hat", g_hat > 0.5 * G,
          strf("k_hat %d keeps %.4g of G", k_hat, g_hat / G));
    put(rec, "G", G);
    put(rec, "saw_weight", saw);
    put(rec, "mean_ell2", mean_ell2);
    put(rec, "k_hat", k_hat);
    put(rec, "g_at_k_hat", g_hat);
}

void run_strip_chain(const ExperimentConfig& cfg, RunRecord& rec) {
    WalkConfig w{cfg.dimension_d, cfg.drift_h};
    StripTableSet ts = StripTableSet::sampled(w, cfg.potential, cfg.beta,
                                              cfg.span_max, cfg.cutoff);
    SigmaChainStats st = simulate_sigma_chain(
        ts, cfg.n_samples, cfg.sigma_max_steps,
        RngStream(cfg.master_seed, kStreamStrip), cfg.max_uncaptured);
    check(rec, "contraction-ci-below-one", st.contraction_ci_hi < 1.0,
          strf("%.6g + 1.96se = %.6g", st.contraction, st.contraction_ci_hi));
    check(rec, "conservative-upper-below-one", st.conservative_upper < 1.0,
          strf("%.6g", st.conservative_upper));
    check(rec, "tail-slope", st.slope_ok,
          strf("slope %.4g (se %.3g)", st.tail_fit.slope,
               st.tail_fit.slope_stderr));
    put(rec, "capture", ts.capture());
    put(rec, "x_unknown", ts.unknown_value());
    put(rec, "m_hat", ts.m_hat());
    put(rec, "contraction", st.contraction);
    put(rec, "contraction_se", st.contraction_se);
    put(rec, "contraction_ci_hi", st.contraction_ci_hi);
    put(rec, "conservative_upper", st.conservative_upper);
    put(rec, "p_sigma1", st.p_sigma1);
    put(rec, "mean_rho", st.mean_rho);
    put(rec, "residual_frac", st.residual_frac);
    put(rec, "unknown_frac", st.unknown_frac);
    put(rec, "tail_slope", st.tail_fit.slope);
    put(rec, "tail_slope_se", st.tail_fit.slope_stderr);
    table(rec, "sigma_pmf", {"m", "p"});
    for (size_t i = 0; i < st.sigma1_pmf.size(); ++i)
        if (st.sigma1_pmf[i] > 0)
            row(rec, "sigma_pmf", {double(i + 1), st.sigma1_pmf[i]});
}

}  // namespace

// ---- public surface -----------------------------------------------------

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{
        "hitting-identity",     "green-identity",  "oracle-fixtures",
        "renewal",              "mass-gap",        "ballistic-consistency",
        "second-moment",        "free-energy-gap", "concentration",
        "restricted-partition", "strip-chain"};
    return names;
}

ExperimentConfig default_config(const std::string& experiment) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end())
        throw std::invalid_argument("unknown experiment: " + experiment);
    ExperimentConfig c;
    c.experiment = experiment;
    if (const char* env = std::getenv("RWRP_BUDGET")) {
        char* end = nullptr;
        double b = std::strtod(env, &end);
        if (end != env && b > 0) c.budget_nodes = b;
    }
    if (experiment == "hitting-identity") {
        c.level_l = 2;
        c.n_samples = 200000;
        c.slack = 5e-3;
    } else if (experiment == "green-identity") {
        c.level_l = 2;
    } else if (experiment == "oracle-fixtures") {
        c.dimension_d = 1;
        c.potential = exponential_potential();
        c.beta = 1.0;
    } else if (experiment == "renewal") {
        c.potential = bernoulli_potential(0.5, 0.5);
        c.beta = 0.3;
        c.level_l = 3;
    } else if (experiment == "mass-gap") {
        c.potential = bernoulli_potential(0.5, 0.5);
        c.beta = 0.3;
        c.span_window_l = 6;
    } else if (experiment == "ballistic-consistency") {
        c.potential = bernoulli_potential(0.5, 0.5);
        c.beta = 0.3;
        c.tol = 1e-4;
        c.slack = 0.02;
    } else if (experiment == "second-moment") {
        c.potential = bernoulli_potential(0.5, 1.0);
        c.beta = 0.5;
        c.n_steps = 6;
        c.n_envs = 10000;
    } else if (experiment == "free-energy-gap") {
        c.dimension_d = 4;
        c.potential = bernoulli_potential(0.5, 1.0);
        c.beta = 0.1;
        c.n_grid = {8, 16, 24};
        c.n_samples = 2000;
        c.n_envs = 100;
    } else if (experiment == "concentration") {
        c.potential = bernoulli_potential(0.5, 1.0);
        c.beta = 0.3;
        c.n_steps = 8;
        c.n_envs = 2000;
        c.k_restrict_cap = 2.0;
    } else if (experiment == "restricted-partition") {
        c.potential = bernoulli_potential(0.5, 1.0);
        c.beta = 0.3;
        c.n_steps = 8;
    } else if (experiment == "strip-chain") {
        c.dimension_d = 4;
        c.potential = point_mass_potential(0.1);
        c.beta = 0.1;
        c.span_max = 8;
        c.cutoff = 60;
        c.n_samples = 2000;
        c.sigma_max_steps = 500;
        c.max_uncaptured = 0.05;
    }
    return c;
}

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("not valid JSON: ") + e.what());
    }
    need_object(j, "top level");
    if (!j.contains("experiment"))
        bad("missing required key 'experiment'");
    ExperimentConfig c = default_config(as_str(j["experiment"], "experiment"));

    for (const auto& [key, val] : j.items()) {
        if (key == "experiment") {
            continue;
        } else if (key == "walk") {
            for (const auto& [k, v] : need_object(val, "walk").items()) {
                if (k == "dimension_d")
                    c.dimension_d = int(as_int(v, "walk.dimension_d"));
                else if (k == "drift_h")
                    c.drift_h = as_num(v, "walk.drift_h");
                else
                    bad("unknown key walk." + k);
            }
        } else if (key == "potential") {
            std::vector<double> kt, kp;
            bool have_kt = false, have_kp = false;
            for (const auto& [k, v] : need_object(val, "potential").items()) {
                if (k == "kind")
                    c.potential.kind = kind_from(as_str(v, "potential.kind"));
                else if (k == "bernoulli_rho")
                    c.potential.rho = as_num(v, "potential.bernoulli_rho");
                else if (k == "atom_v")
                    c.potential.v = as_num(v, "potential.atom_v");
                else if (k == "trap_beta_prime")
                    c.potential.beta_prime = as_num(v, "potential.trap_beta_prime");
                else if (k == "knots_t") {
                    kt = as_num_list(v, "potential.knots_t");
                    have_kt = true;
                } else if (k == "knots_phi") {
                    kp = as_num_list(v, "potential.knots_phi");
                    have_kp = true;
                } else
                    bad("unknown key potential." + k);
            }
            if (have_kt != have_kp)
                bad("potential.knots_t and potential.knots_phi come together");
            if (have_kt) {
                if (kt.size() != kp.size() || kt.size() < 2)
                    bad("potential knots need matching lengths >= 2");
                c.potential.grid.clear();
                for (size_t i = 0; i < kt.size(); ++i)
                    c.potential.grid.emplace_back(kt[i], kp[i]);
            }
        } else if (key == "disorder") {
            for (const auto& [k, v] : need_object(val, "disorder").items()) {
                if (k == "beta")
                    c.beta = as_num(v, "disorder.beta");
                else if (k == "beta_grid")
                    c.beta_grid = as_num_list(v, "disorder.beta_grid");
                else
                    bad("unknown key disorder." + k);
            }
        } else if (key == "paths") {
            for (const auto& [k, v] : need_object(val, "paths").items()) {
                if (k == "n_steps")
                    c.n_steps = int(as_int(v, "paths.n_steps"));
                else if (k == "n_grid") {
                    c.n_grid.clear();
                    for (long long e : as_int_list(v, "paths.n_grid"))
                        c.n_grid.push_back(int(e));
                } else
                    bad("unknown key paths." + k);
            }
        } else if (key == "series") {
            for (const auto& [k, v] : need_object(val, "series").items()) {
                if (k == "level_l")
                    c.level_l = int(as_int(v, "series.level_l"));
                else if (k == "span_window_l")
                    c.span_window_l = int(as_int(v, "series.span_window_l"));
                else if (k == "period_p")
                    c.period_p = int(as_int(v, "series.period_p"));
                else if (k == "k_cap")
                    c.k_cap = int(as_int(v, "series.k_cap"));
                else if (k == "tol")
                    c.tol = as_num(v, "series.tol");
                else
                    bad("unknown key series." + k);
            }
        } else if (key == "strip") {
            for (const auto& [k, v] : need_object(val, "strip").items()) {
                if (k == "cutoff")
                    c.cutoff = int(as_int(v, "strip.cutoff"));
                else if (k == "span_max")
                    c.span_max = int(as_int(v, "strip.span_max"));
                else if (k == "sigma_max_steps")
                    c.sigma_max_steps = as_int(v, "strip.sigma_max_steps");
                else if (k == "max_uncaptured")
                    c.max_uncaptured = as_num(v, "strip.max_uncaptured");
                else
                    bad("unknown key strip." + k);
            }
        } else if (key == "sampling") {
            for (const auto& [k, v] : need_object(val, "sampling").items()) {
                if (k == "n_samples")
                    c.n_samples = as_int(v, "sampling.n_samples");
                else if (k == "n_envs")
                    c.n_envs = as_int(v, "sampling.n_envs");
                else if (k == "master_seed") {
                    long long s = as_int(v, "sampling.master_seed");
                    if (s < 0) bad("sampling.master_seed must be >= 0");
                    c.master_seed = uint64_t(s);
                } else
                    bad("unknown key sampling." + k);
            }
        } else if (key == "checks") {
            for (const auto& [k, v] : need_object(val, "checks").items()) {
                if (k == "slack")
                    c.slack = as_num(v, "checks.slack");
                else if (k == "k_restrict_cap")
                    c.k_restrict_cap = as_num(v, "checks.k_restrict_cap");
                else
                    bad("unknown key checks." + k);
            }
        } else if (key == "pair") {
            for (const auto& [k, v] : need_object(val, "pair").items()) {
                if (k == "offset_dy") {
                    auto dy = as_int_list(v, "pair.offset_dy");
                    if (dy.size() > 8) bad("pair.offset_dy has at most 8 axes");
                    c.offset_dy.fill(0);
                    for (size_t i = 0; i < dy.size(); ++i)
                        c.offset_dy[i] = int(dy[i]);
                    if (c.offset_dy[0] != 0)
                        bad("pair.offset_dy[0] (drift axis) must be 0");
                } else
                    bad("unknown key pair." + k);
            }
        } else if (key == "io") {
            for (const auto& [k, v] : need_object(val, "io").items()) {
                if (k == "out_dir")
                    c.out_dir = as_str(v, "io.out_dir");
                else
                    bad("unknown key io." + k);
            }
        } else if (key == "budget_nodes") {
            c.budget_nodes = as_num(val, "budget_nodes");
        } else {
            bad("unknown key: " + key);
        }
    }

    if (!(c.budget_nodes > 0)) bad("budget_nodes must be positive");
    if (c.dimension_d < 1 || c.dimension_d > 8)
        bad("walk.dimension_d must be in [1, 8]");
    if (c.beta < 0) bad("disorder.beta must be >= 0");
    for (double b : c.beta_grid)
        if (b < 0) bad("disorder.beta_grid entries must be >= 0");
    if (c.n_steps < 0) bad("paths.n_steps must be >= 0");
    for (size_t i = 0; i < c.n_grid.size(); ++i)
        if (c.n_grid[i] < 1 || (i && c.n_grid[i] <= c.n_grid[i - 1]))
            bad("paths.n_grid must be strictly increasing positive lengths");
    if (c.level_l < 1) bad("series.level_l must be >= 1");
    if (c.span_window_l < 1) bad("series.span_window_l must be >= 1");
    if (c.period_p < 1) bad("series.period_p must be >= 1");
    if (c.k_cap < 2) bad("series.k_cap must be >= 2");
    if (!(c.tol > 0)) bad("series.tol must be positive");
    if (c.cutoff < 2) bad("strip.cutoff must be >= 2");
    if (c.span_max < 1) bad("strip.span_max must be >= 1");
    if (c.sigma_max_steps < 0) bad("strip.sigma_max_steps must be >= 0");
    if (!(c.max_uncaptured > 0 && c.max_uncaptured <= 1))
        bad("strip.max_uncaptured must be in (0, 1]");
    if (c.n_samples < 1) bad("sampling.n_samples must be >= 1");
    if (c.n_envs < 1) bad("sampling.n_envs must be >= 1");
    if (c.slack < 0) bad("checks.slack must be >= 0");
    if (c.k_restrict_cap < 0) bad("checks.k_restrict_cap must be >= 0");
    return c;
}

std::string canonical_config(const ExperimentConfig& c) {
    std::string s;
    auto kv = [&s](const char* k, const std::string& v) {
        s += k;
        s += '=';
        s += v;
        s += ';';
    };
    auto kvi = [&kv](const char* k, long long v) { kv(k, std::to_string(v)); };
    auto kvd = [&kv](const char* k, double v) { kv(k, num17(v)); };
    kv("experiment", c.experiment);
    kvi("walk.dimension_d", c.dimension_d);
    kvd("walk.drift_h", c.drift_h);
    kv("potential.kind", kind_name(c.potential.kind));
    kvd("potential.bernoulli_rho", c.potential.rho);
    kvd("potential.atom_v", c.potential.v);
    kvd("potential.trap_beta_prime", c.potential.beta_prime);
    {
        std::string g = "[";
        for (const auto& [t, f] : c.potential.grid)
            g += num17(t) + ":" + num17(f) + ",";
        kv("potential.knots", g + "]");
    }
    kvd("disorder.beta", c.beta);
    {
        std::string g = "[";
        for (double b : c.beta_grid) g += num17(b) + ",";
        kv("disorder.beta_grid", g + "]");
    }
    kvi("paths.n_steps", c.n_steps);
    {
        std::string g = "[";
        for (int n : c.n_grid) g += std::to_string(n) + ",";
        kv("paths.n_grid", g + "]");
    }
    kvi("series.level_l", c.level_l);
    kvi("series.span_window_l", c.span_window_l);
    kvi("series.period_p", c.period_p);
    kvi("series.k_cap", c.k_cap);
    kvd("series.tol", c.tol);
    kvi("strip.cutoff", c.cutoff);
    kvi("strip.span_max", c.span_max);
    kvi("strip.sigma_max_steps", c.sigma_max_steps);
    kvd("strip.max_uncaptured", c.max_uncaptured);
    kvi("sampling.n_samples", c.n_samples);
    kvi("sampling.n_envs", c.n_envs);
    kv("sampling.master_seed", std::to_string(c.master_seed));
    kvd("checks.slack", c.slack);
    kvd("checks.k_restrict_cap", c.k_restrict_cap);
    {
        std::string g = "[";
        for (int v : c.offset_dy) g += std::to_string(v) + ",";
        kv("pair.offset_dy", g + "]");
    }
    return s;
}

uint64_t config_hash(const ExperimentConfig& c) {
    std::string s = canonical_config(c);
    uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string record_json_line(const RunRecord& rec) {
    ojson j;
    j["schema_version"] = rec.schema_version;
    j["tool_version"] = rec.tool_version;
    j["experiment"] = rec.experiment;
    j["config_hash"] = strf("%016" PRIx64, rec.config_hash);
    j["master_seed"] = rec.master_seed;
    j["pass"] = rec.pass;
    ojson sc = ojson::object();
    for (const auto& [k, v] : rec.scalars) sc[k] = v;
    j["scalars"] = std::move(sc);
    j["verdicts"] = rec.verdicts;
    ojson tabs = ojson::object();
    for (const auto& [name, headers] : rec.table_headers) {
        ojson t = ojson::object();
        t["headers"] = headers;
        auto rit = rec.tables.find(name);
        t["rows"] = rit == rec.tables.end() ? ojson::array() : ojson(rit->second);
        tabs[name] = std::move(t);
    }
    j["tables"] = std::move(tabs);
    return j.dump();
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
        throw std::invalid_argument("unknown experiment: " + cfg.experiment);
    auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.tool_version = "rwrp 1.0.0";
    rec.experiment = cfg.experiment;
    rec.config_hash = config_hash(cfg);
    rec.master_seed = cfg.master_seed;
    rec.pass = true;
    if (cfg.experiment == "hitting-identity")
        run_hitting_identity(cfg, rec);
    else if (cfg.experiment == "green-identity")
        run_green_identity(cfg, rec);
    else if (cfg.experiment == "oracle-fixtures")
        run_oracle_fixtures(cfg, rec);
    else if (cfg.experiment == "renewal")
        run_renewal(cfg, rec);
    else if (cfg.experiment == "mass-gap")
        run_mass_gap(cfg, rec);
    else if (cfg.experiment == "ballistic-consistency")
        run_ballistic_consistency(cfg, rec);
    else if (cfg.experiment == "second-moment")
        run_second_moment(cfg, rec);
    else if (cfg.experiment == "free-energy-gap")
        run_free_energy_gap(cfg, rec);
    else if (cfg.experiment == "concentration")
        run_concentration(cfg, rec);
    else if (cfg.experiment == "restricted-partition")
        run_restricted_partition(cfg, rec);
    else if (cfg.experiment == "strip-chain")
        run_strip_chain(cfg, rec);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

void emit_csv(const RunRecord& rec, const std::string& table,
              const std::string& path) {
    auto hit = rec.table_headers.find(table);
    if (hit == rec.table_headers.end())
        throw std::invalid_argument("unknown table: " + table);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (size_t i = 0; i < hit->second.size(); ++i)
        f << (i ? "," : "") << hit->second[i];
    f << '\n';
    auto rit = rec.tables.find(table);
    if (rit == rec.tables.end()) return;
    for (const auto& r : rit->second) {
        for (size_t i = 0; i < r.size(); ++i)
            f << (i ? "," : "") << num12(r[i]);
        f << '\n';
    }
}

void write_records(const ExperimentConfig& cfg, const RunRecord& rec) {
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f(cfg.out_dir + "/records.jsonl", std::ios::app);
        if (!f) throw std::runtime_error("cannot write records.jsonl");
        f << record_json_line(rec) << '\n';
    }
    {
        // wall time lives here, away from the replayable record
        ojson t;
        t["experiment"] = rec.experiment;
        t["config_hash"] = strf("%016" PRIx64, rec.config_hash);
        t["master_seed"] = rec.master_seed;
        t["wall_ms"] = rec.wall_ms;
        std::ofstream f(cfg.out_dir + "/timings.jsonl", std::ios::app);
        if (!f) throw std::runtime_error("cannot write timings.jsonl");
        f << t.dump() << '\n';
    }
    for (const auto& [name, headers] : rec.table_headers)
        emit_csv(rec, name, cfg.out_dir + "/" + name + ".csv");
}

int cli_main(int argc, char** argv) {
    CLI::App app{
        "rwrp: experiment driver for a drifted walk in a random potential"};
    std::string config_path, experiment, out_dir;
    uint64_t seed = 0;
    double budget = 0;
    bool verify = false, list = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--experiment", experiment,
                   "experiment name (see --list); with --config, overrides it");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--budget", budget,
                   "enumeration node budget override (env RWRP_BUDGET sets "
                   "the default)");
    app.add_flag("--verify", verify,
                 "run twice and require byte-identical records");
    app.add_flag("--list", list, "print experiment names and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (list) {
        for (const auto& n : experiment_names()) std::printf("%s\n", n.c_str());
        return 0;
    }

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) {
                std::fprintf(stderr, "error: cannot read %s\n",
                             config_path.c_str());
                return 2;
            }
            std::stringstream ss;
            ss << f.rdbuf();
            cfg = parse_config_json(ss.str());
            if (!experiment.empty()) {
                const auto& names = experiment_names();
                if (std::find(names.begin(), names.end(), experiment) ==
                    names.end()) {
                    std::fprintf(stderr, "error: unknown experiment: %s\n",
                                 experiment.c_str());
                    return 2;
                }
                cfg.experiment = experiment;
            }
        } else if (!experiment.empty()) {
            cfg = default_config(experiment);
        } else {
            std::fprintf(stderr,
                         "error: provide --experiment NAME or --config FILE "
                         "(try --list)\n");
            return 2;
        }
        if (app.count("--seed")) cfg.master_seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (app.count("--budget")) {
            if (!(budget > 0)) {
                std::fprintf(stderr, "error: --budget must be positive\n");
                return 2;
            }
            cfg.budget_nodes = budget;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    RunRecord rec;
    try {
        rec = run_experiment(cfg);
        if (verify) {
            RunRecord rec2 = run_experiment(cfg);
            bool same = record_json_line(rec) == record_json_line(rec2);
            check(rec, "replay-byte-identical", same);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    try {
        write_records(cfg, rec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    std::printf("%s  seed %" PRIu64 "  config %016" PRIx64 "\n",
                cfg.experiment.c_str(), cfg.master_seed, rec.config_hash);
    for (const auto& [k, v] : rec.scalars)
        std::printf("  %-22s %.12g\n", k.c_str(), v);
    for (const auto& v : rec.verdicts) std::printf("  %s\n", v.c_str());
    std::printf("%s\n", rec.pass ? "PASS" : "FAIL");
    return rec.pass ? 0 : 1;
}

}  // namespace rwrp
