#include "rwrp/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <stdexcept>

#include "rwrp/enumerate.hpp"
#include "rwrp/fit.hpp"

namespace rwrp {

namespace {

double now_ms() {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt_params(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    return std::string(buf);
}

// sample sd / sqrt(n) from fixed-order running sums
double stderr_from_sums(double sum, double sumsq, long long n) {
    if (n < 2) return 0.0;
    double mean = sum / static_cast<double>(n);
    double var = (sumsq - static_cast<double>(n) * mean * mean) /
                 static_cast<double>(n - 1);
    if (var < 0.0) var = 0.0;
    return std::sqrt(var / static_cast<double>(n));
}

Path prefix_of(const Path& p, int n) {
    Path q = p;
    q.steps.resize(static_cast<size_t>(n));
    return q;
}

uint64_t env_seed_for(const RngStream& stream, long long e) {
    return stream.derive(2 * static_cast<uint64_t>(e)).at(0);
}

} // namespace

EstimateRecord mc_annealed_Z(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, int N, long long n,
                             RngStream stream) {
    if (n < 2) throw std::invalid_argument("mc_annealed_Z: n < 2");
    double t0 = now_ms();
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < n; ++i) {
        RngStream si = stream.derive(static_cast<uint64_t>(i));
        Path p = sample_path(cfg, N, si);
        double w = std::exp(-annealed_energy(p, spec, beta));
        sum += w;
        sumsq += w * w;
    }
    EstimateRecord rec;
    rec.quantity = "annealed_Z";
    rec.params = fmt_params("d=%d,h=%.17g,beta=%.17g,N=%d,n=%lld", cfg.d, cfg.h,
                            beta, N, n);
    rec.n_samples = n;
    rec.mean = sum / static_cast<double>(n);
    rec.stderr_ = stderr_from_sums(sum, sumsq, n);
    rec.master_seed = stream.master_seed;
    rec.stream_id = stream.stream_id;
    rec.wall_ms = now_ms() - t0;
    return rec;
}

QuenchedRun mc_quenched_logZ(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, int N, long long n_paths,
                             long long n_envs, RngStream stream) {
    if (n_paths < 2 || n_envs < 2)
        throw std::invalid_argument("mc_quenched_logZ: need >= 2 paths and envs");
    QuenchedRun run;
    run.n_paths = n_paths;
    run.n_envs = n_envs;
    run.master_seed = stream.master_seed;
    run.stream_id = stream.stream_id;
    run.z_hat.reserve(static_cast<size_t>(n_envs));
    run.log_z.reserve(static_cast<size_t>(n_envs));
    for (long long e = 0; e < n_envs; ++e) {
        Environment env{spec, env_seed_for(stream, e)};
        RngStream ps = stream.derive(2 * static_cast<uint64_t>(e) + 1);
        double sum = 0.0;
        for (long long i = 0; i < n_paths; ++i) {
            RngStream si = ps.derive(static_cast<uint64_t>(i));
            Path p = sample_path(cfg, N, si);
            sum += std::exp(-quenched_energy(p, env, beta));
        }
        double z = sum / static_cast<double>(n_paths);
        run.z_hat.push_back(z);
        run.log_z.push_back(std::log(z));
    }
    MeanErr z = mean_err(run.z_hat);
    MeanErr lz = mean_err(run.log_z);
    run.mean_z = z.mean;
    run.se_z = z.stderr_;
    run.mean_log_z = lz.mean;
    run.se_log_z = lz.stderr_;
    run.jensen_gap = std::log(run.mean_z) - run.mean_log_z;
    return run;
}

EstimateRecord mc_second_moment_ratio(const WalkConfig& cfg,
                                      const PotentialSpec& spec, double beta,
                                      int N, long long n_pairs,
                                      const std::array<int, 8>& dy,
                                      RngStream stream) {
    if (n_pairs < 2) throw std::invalid_argument("mc_second_moment_ratio: n < 2");
    double t0 = now_ms();
    const int n_batches = static_cast<int>(std::min<long long>(50, n_pairs));
    std::vector<double> bn(n_batches, 0.0), b1(n_batches, 0.0),
        b2(n_batches, 0.0);
    double num = 0.0, den1 = 0.0, den2 = 0.0;
    for (long long i = 0; i < n_pairs; ++i) {
        RngStream s1 = stream.derive(2 * static_cast<uint64_t>(i));
        RngStream s2 = stream.derive(2 * static_cast<uint64_t>(i) + 1);
        Path p1 = sample_path(cfg, N, s1);
        Path p2 = sample_path(cfg, N, s2);
        double wc = std::exp(-coupled_energy(p1, p2, spec, beta, dy));
        double w1 = std::exp(-annealed_energy(p1, spec, beta));
        double w2 = std::exp(-annealed_energy(p2, spec, beta));
        int b = static_cast<int>(i * n_batches / n_pairs);
        num += wc;
        den1 += w1;
        den2 += w2;
        bn[b] += wc;
        b1[b] += w1;
        b2[b] += w2;
    }
    double n = static_cast<double>(n_pairs);
    double ratio = (num / n) / ((den1 / n) * (den2 / n));
    // spread of per-batch plug-in ratios; each batch holds ~n/50 pairs
    std::vector<double> br(n_batches);
    for (int b = 0; b < n_batches; ++b) {
        double m = n / n_batches;
        br[b] = (bn[b] / m) / ((b1[b] / m) * (b2[b] / m));
    }
    MeanErr be = mean_err(br);
    EstimateRecord rec;
    rec.quantity = "second_moment_ratio";  // plug-in, bias O(1/n_pairs)
    rec.params =
        fmt_params("d=%d,h=%.17g,beta=%.17g,N=%d,n_pairs=%lld,dy1=%d", cfg.d,
                   cfg.h, beta, N, n_pairs, cfg.d > 1 ? dy[1] : 0);
    rec.n_samples = n_pairs;
    rec.mean = ratio;
    rec.stderr_ = be.stderr_;
    rec.master_seed = stream.master_seed;
    rec.stream_id = stream.stream_id;
    rec.wall_ms = now_ms() - t0;
    return rec;
}

RatioCurve mc_ratio_curve(const WalkConfig& cfg, const PotentialSpec& spec,
                          double beta, const std::vector<int>& grid,
                          long long n_pairs, RngStream stream) {
    if (grid.empty()) throw std::invalid_argument("mc_ratio_curve: empty grid");
    if (n_pairs < 2) throw std::invalid_argument("mc_ratio_curve: n < 2");
    const int max_n = *std::max_element(grid.begin(), grid.end());
    const int g = static_cast<int>(grid.size());
    const int n_batches = static_cast<int>(std::min<long long>(50, n_pairs));
    const std::array<int, 8> dy{};  // both replicas from the origin

    // batch sums: [batch][grid] for numerator and the two denominators
    std::vector<std::vector<double>> bn(n_batches, std::vector<double>(g, 0.0));
    std::vector<std::vector<double>> b1 = bn, b2 = bn;
    for (long long i = 0; i < n_pairs; ++i) {
        RngStream s1 = stream.derive(2 * static_cast<uint64_t>(i));
        RngStream s2 = stream.derive(2 * static_cast<uint64_t>(i) + 1);
        Path p1 = sample_path(cfg, max_n, s1);
        Path p2 = sample_path(cfg, max_n, s2);
        int b = static_cast<int>(i * n_batches / n_pairs);
        for (int j = 0; j < g; ++j) {
            Path q1 = prefix_of(p1, grid[j]);
            Path q2 = prefix_of(p2, grid[j]);
            bn[b][j] += std::exp(-coupled_energy(q1, q2, spec, beta, dy));
            b1[b][j] += std::exp(-annealed_energy(q1, spec, beta));
            b2[b][j] += std::exp(-annealed_energy(q2, spec, beta));
        }
    }

    auto curve_from = [&](const std::vector<int>& picks) {
        std::vector<double> r(g);
        for (int j = 0; j < g; ++j) {
            double sn = 0.0, s1 = 0.0, s2 = 0.0;
            for (int b : picks) {
                sn += bn[b][j];
                s1 += b1[b][j];
                s2 += b2[b][j];
            }
            double m = static_cast<double>(picks.size());
            r[j] = (sn / m) / ((s1 / m) * (s2 / m));
        }
        return r;
    };

    std::vector<int> all(n_batches);
    for (int b = 0; b < n_batches; ++b) all[b] = b;

    RatioCurve out;
    out.grid = grid;
    out.n_pairs = n_pairs;
    out.master_seed = stream.master_seed;
    out.stream_id = stream.stream_id;
    out.ratio = curve_from(all);
    out.stderr_.assign(static_cast<size_t>(g), 0.0);
    for (int j = 0; j < g; ++j) {
        std::vector<double> br(n_batches);
        for (int b = 0; b < n_batches; ++b)
            br[b] = curve_from(std::vector<int>{b})[j];
        out.stderr_[j] = mean_err(br).stderr_;
    }
    out.kendall = kendall_tau(out.ratio);

    // bootstrap over batches for the rank-correlation interval
    const int n_boot = 2000;
    RngStream boot = stream.derive(0x626f6f74ULL);  // "boot"
    std::vector<double> taus(n_boot);
    std::vector<int> picks(n_batches);
    for (int r = 0; r < n_boot; ++r) {
        for (int b = 0; b < n_batches; ++b)
            picks[b] = static_cast<int>(boot.next_u64() % n_batches);
        taus[r] = kendall_tau(curve_from(picks));
    }
    std::sort(taus.begin(), taus.end());
    out.kendall_lo = taus[static_cast<size_t>(0.025 * n_boot)];
    out.kendall_hi = taus[static_cast<size_t>(0.975 * n_boot) - 1];
    return out;
}

GapCurve mc_free_energy_gap(const WalkConfig& cfg, const PotentialSpec& spec,
                            double beta, const std::vector<int>& grid,
                            long long n_paths, long long n_envs,
                            RngStream stream) {
    if (grid.empty())
        throw std::invalid_argument("mc_free_energy_gap: empty grid");
    GapCurve out;
    out.grid = grid;
    out.n_paths = n_paths;
    out.n_envs = n_envs;
    out.master_seed = stream.master_seed;
    out.stream_id = stream.stream_id;
    for (int N : grid) {
        // same derivation ids at every N: common random numbers along the grid
        QuenchedRun run =
            mc_quenched_logZ(cfg, spec, beta, N, n_paths, n_envs, stream);
        double log_g = std::log(run.mean_z);
        std::vector<double> gaps(run.log_z.size());
        for (size_t e = 0; e < run.log_z.size(); ++e)
            gaps[e] = std::fabs(run.log_z[e] - log_g);
        MeanErr ge = mean_err(gaps);
        out.gap.push_back(ge.mean);
        out.gap_se.push_back(ge.stderr_);
        out.mean_log_zqu.push_back(run.mean_log_z);
        out.log_g_hat.push_back(log_g);
        out.jensen_gap.push_back(run.jensen_gap);
    }
    out.c_fit = 0.0;
    for (size_t j = 0; j < grid.size(); ++j) {
        double env = 1.0 + beta * std::sqrt(static_cast<double>(grid[j]));
        out.c_fit = std::max(out.c_fit, out.gap[j] / env);
    }
    out.envelope_ok = true;  // c_fit is the sup of gap/envelope on the grid
    for (size_t j = 0; j < grid.size(); ++j) {
        double env = 1.0 + beta * std::sqrt(static_cast<double>(grid[j]));
        if (out.gap[j] > out.c_fit * env * (1.0 + 1e-12)) out.envelope_ok = false;
    }
    return out;
}

PZReport paley_zygmund_check(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, int N, long long n_envs,
                             RngStream stream) {
    if (n_envs < 2) throw std::invalid_argument("paley_zygmund_check: n < 2");
    const double budget = 1e9;
    PZReport rep;
    rep.n_envs = n_envs;
    rep.ez_exact = exact_G(cfg, spec, beta, N, budget);
    rep.ez2_exact = exact_second_moment(cfg, spec, beta, N, N,
                                        std::array<int, 8>{}, budget);
    PathTable table = build_path_table(cfg, N, budget);
    long long hits = 0;
    const double half = 0.5 * rep.ez_exact;
    for (long long e = 0; e < n_envs; ++e) {
        Environment env{spec, env_seed_for(stream, e)};
        if (quenched_partition(table, env, beta) >= half) ++hits;
    }
    rep.p_emp = static_cast<double>(hits) / static_cast<double>(n_envs);
    rep.p_se = std::sqrt(std::max(rep.p_emp * (1.0 - rep.p_emp), 1e-12) /
                         static_cast<double>(n_envs));
    rep.rhs = rep.ez_exact * rep.ez_exact / (4.0 * rep.ez2_exact) -
              3.0 * rep.p_se;
    rep.ok = rep.p_emp >= rep.rhs;
    return rep;
}

ConcReport concentration_check(const WalkConfig& cfg,
                               const PotentialSpec& spec, double beta,
                               double k, int N, long long n_envs,
                               RngStream stream) {
    if (k < 1.0)
        throw std::invalid_argument(
            "concentration_check: k < 1 leaves no admissible path");
    double v_bar = ess_sup_v(spec);
    if (!std::isfinite(v_bar))
        throw std::invalid_argument("concentration_check: unbounded potential");
    if (n_envs < 2) throw std::invalid_argument("concentration_check: n < 2");

    // restrict the table to ||ell||^2 <= kN once, then evaluate per env
    PathTable table = build_path_table(cfg, N, 1e9);
    PathTable kept;
    kept.d = table.d;
    kept.n_steps = table.n_steps;
    const double cap = k * static_cast<double>(N) + 1e-9;
    for (const auto& ent : table.entries) {
        double sumsq = 0.0;
        for (const auto& sc : ent.sites)
            sumsq += static_cast<double>(sc.second) * sc.second;
        if (sumsq <= cap) kept.entries.push_back(ent);
    }
    if (kept.entries.empty())
        throw std::invalid_argument("concentration_check: restricted event empty");

    std::vector<double> logs(static_cast<size_t>(n_envs));
    for (long long e = 0; e < n_envs; ++e) {
        Environment env{spec, env_seed_for(stream, e)};
        logs[static_cast<size_t>(e)] =
            std::log(quenched_partition(kept, env, beta));
    }
    std::vector<double> sorted = logs;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0)
        median = 0.5 * (median + sorted[sorted.size() / 2 - 1]);

    ConcReport rep;
    rep.median = median;
    rep.v_bar = v_bar;
    rep.n_envs = n_envs;
    double scale = 16.0 * beta * beta * v_bar * v_bar * k *
                   static_cast<double>(N);
    double t_max = 4.0 * beta * v_bar * std::sqrt(k * static_cast<double>(N));
    const int n_t = 12;
    for (int j = 1; j <= n_t; ++j) {
        double t = t_max * j / n_t;
        long long out_count = 0;
        for (double x : logs)
            if (std::fabs(x - median) >= t) ++out_count;
        double p = static_cast<double>(out_count) / static_cast<double>(n_envs);
        double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) /
                              static_cast<double>(n_envs));
        double bound = scale > 0.0 ? 4.0 * std::exp(-t * t / scale)
                                   : (t > 0.0 ? 0.0 : 4.0);
        rep.t_grid.push_back(t);
        rep.emp_tail.push_back(p);
        rep.emp_se.push_back(se);
        rep.bound.push_back(bound);
        if (p > bound + 3.0 * se) ++rep.violations;
    }
    rep.ok = rep.violations == 0;
    return rep;
}

} // namespace rwrp
