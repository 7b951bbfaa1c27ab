#include "rwrp/walk.hpp"

#include <cmath>

#include "rwrp/fit.hpp"

namespace rwrp {

StepLaw step_law(const WalkConfig& cfg) {
    if (cfg.d < 1 || cfg.d > 8)
        throw std::invalid_argument("step_law: d must be in [1, 8]");
    if (!(cfg.h >= 0.0) || !std::isfinite(cfg.h))
        throw std::invalid_argument("step_law: h must be finite and >= 0");
    StepLaw law;
    law.d = cfg.d;
    law.h = cfg.h;
    double eh = std::exp(cfg.h), emh = std::exp(-cfg.h);
    law.sigma = eh + emh + 2.0 * cfg.d - 2.0;
    law.p_plus = eh / law.sigma;
    law.p_minus = emh / law.sigma;
    law.p_perp = 1.0 / law.sigma;
    law.log_p_plus = cfg.h - std::log(law.sigma);
    law.log_p_minus = -cfg.h - std::log(law.sigma);
    law.log_p_perp = -std::log(law.sigma);
    law.lambda = std::log(law.sigma / (2.0 * cfg.d));
    return law;
}

double escape_prob(const WalkConfig& cfg) {
    StepLaw law = step_law(cfg);
    return law.p_plus - law.p_minus;
}

double lambda_drift(const WalkConfig& cfg) { return step_law(cfg).lambda; }

double hitting_prob_neg(const WalkConfig& cfg, int L) {
    if (L < 1) throw std::invalid_argument("hitting_prob_neg: L >= 1 required");
    if (!(cfg.h > 0.0))
        throw std::invalid_argument("hitting_prob_neg: needs h > 0 (else prob is 1)");
    (void)step_law(cfg); // validates d
    return std::exp(-2.0 * L * cfg.h);
}

double proj_mgf_neg(const WalkConfig& cfg, double theta) {
    StepLaw law = step_law(cfg);
    return law.p_plus * std::exp(-theta) + law.p_minus * std::exp(theta) + law.proj_stay();
}

double chernoff_rho_min(const WalkConfig& cfg) {
    // minimum at theta = h: rho = (2 + 2d - 2)/Sigma = e^{-lambda}
    return std::exp(-lambda_drift(cfg));
}

uint64_t pack_site(const int* x, int d) {
    if (d <= 4) {
        uint64_t key = 0;
        for (int i = 0; i < d; ++i) {
            int v = x[i];
            if (v < -32768 || v > 32767)
                throw std::overflow_error("pack_site: coordinate out of 16-bit range");
            key |= (static_cast<uint64_t>(static_cast<uint16_t>(v + 32768))) << (16 * i);
        }
        // distinguish e.g. d=1 site (a) from d=2 site (a,0-encoded)
        return key ^ (static_cast<uint64_t>(d) << 60);
    }
    uint64_t key = 0;
    for (int i = 0; i < d; ++i) {
        int v = x[i];
        if (v < -128 || v > 127)
            throw std::overflow_error("pack_site: coordinate out of 8-bit range");
        key |= (static_cast<uint64_t>(static_cast<uint8_t>(v + 128))) << (8 * i);
    }
    return mix64(key) ^ (static_cast<uint64_t>(d) << 60) ^ 0x55aa55aa55aa55aaULL;
}

int LocalTimeField::range_size() const {
    int r = 0;
    for (auto& kv : counts)
        if (kv.second > 0) ++r;
    return r;
}

long long LocalTimeField::total() const {
    long long t = 0;
    for (auto& kv : counts) t += kv.second;
    return t;
}

long long LocalTimeField::norm_sq() const {
    long long t = 0;
    for (auto& kv : counts) t += static_cast<long long>(kv.second) * kv.second;
    return t;
}

LocalTimeField local_times(const Path& path, int M, int N) {
    LocalTimeField f;
    for_each_site(path, M, N, [&](uint64_t key, const std::array<int, 8>&) {
        ++f.counts[key];
    });
    return f;
}

std::vector<int> proj_heights(const Path& path) {
    std::vector<int> s(static_cast<size_t>(path.length()) + 1);
    s[0] = path.start[0];
    for (int n = 1; n <= path.length(); ++n) {
        int e = path.steps[static_cast<size_t>(n - 1)];
        int d1 = (e == 0) ? +1 : (e == 1 ? -1 : 0);
        s[static_cast<size_t>(n)] = s[static_cast<size_t>(n - 1)] + d1;
    }
    return s;
}

Path sample_path(const WalkConfig& cfg, int N, RngStream& rng) {
    StepLaw law = step_law(cfg);
    if (N < 0) throw std::invalid_argument("sample_path: N >= 0 required");
    Path p;
    p.d = cfg.d;
    p.steps.resize(static_cast<size_t>(N));
    // cumulative step probabilities in fixed step-index order
    std::vector<double> cum(static_cast<size_t>(2 * cfg.d));
    double acc = 0.0;
    for (int e = 0; e < 2 * cfg.d; ++e) {
        acc += law.step_prob(e);
        cum[static_cast<size_t>(e)] = acc;
    }
    for (int n = 0; n < N; ++n)
        p.steps[static_cast<size_t>(n)] =
            static_cast<uint8_t>(rng.next_index(cum.data(), 2 * cfg.d, acc));
    return p;
}

double path_log_weight(const StepLaw& law, const Path& path) {
    double lw = 0.0;
    for (uint8_t e : path.steps) lw += law.step_log_prob(e);
    return lw;
}

namespace {

// horizon such that e^{-theta L} rho_theta^{N+1} / (1 - rho_theta) <= target,
// theta chosen by golden section on the log of the bound at a provisional N
int certified_horizon(const WalkConfig& cfg, int L, double target, double* residual_out) {
    double rho_star = chernoff_rho_min(cfg);
    // provisional horizon from theta = h
    double lr = std::log(rho_star);
    int n0 = static_cast<int>(std::ceil(
        (std::log(target * (1.0 - rho_star)) + cfg.h * L) / lr));
    n0 = std::max(n0, L + 1);
    // refine theta for that horizon (the e^{-theta L} factor favors theta > h);
    // rho_theta < 1 exactly on (0, 2h), and the log-bound is convex there
    auto bound_log = [&](double theta) {
        double rho = proj_mgf_neg(cfg, theta);
        if (rho >= 1.0) return 1e100;
        return -theta * L + (n0 + 1.0) * std::log(rho) - std::log1p(-rho);
    };
    double theta_sup = 2.0 * cfg.h;
    double theta = golden_section_min(bound_log, 1e-7 * theta_sup,
                                      theta_sup * (1.0 - 1e-9), 1e-10 * theta_sup);
    double rho = proj_mgf_neg(cfg, theta);
    int horizon = n0;
    while (std::exp(-theta * L) * std::pow(rho, horizon + 1.0) / (1.0 - rho) > target)
        ++horizon;
    if (residual_out)
        *residual_out = std::exp(-theta * L) * std::pow(rho, horizon + 1.0) / (1.0 - rho);
    return horizon;
}

} // namespace

HitEstimate mc_hit_frequency(const WalkConfig& cfg, int L, long long n_walks,
                             RngStream rng, double residual_target) {
    if (L < 1) throw std::invalid_argument("mc_hit_frequency: L >= 1 required");
    if (!(cfg.h > 0.0))
        throw std::invalid_argument("mc_hit_frequency: needs h > 0");
    StepLaw law = step_law(cfg);
    HitEstimate est;
    est.horizon = certified_horizon(cfg, L, residual_target, &est.residual);
    est.n_walks = n_walks;
    double pu = law.proj_up(), pd = law.proj_down();
    long long hits = 0;
    for (long long i = 0; i < n_walks; ++i) {
        RngStream walk_rng = rng.derive(static_cast<uint64_t>(i));
        int s = 0;
        for (int n = 0; n < est.horizon; ++n) {
            double u = walk_rng.next_double();
            if (u < pu) ++s;
            else if (u < pu + pd) --s;
            if (s == -L) { ++hits; break; }
            // cannot reach -L in the remaining steps: stop early
            if (s + L > est.horizon - n - 1) break;
        }
    }
    est.freq = static_cast<double>(hits) / static_cast<double>(n_walks);
    est.stderr_ = std::sqrt(est.freq * (1.0 - est.freq) / static_cast<double>(n_walks));
    return est;
}

HitEstimate dp_hit_probability(const WalkConfig& cfg, int L, double residual_target) {
    if (L < 1) throw std::invalid_argument("dp_hit_probability: L >= 1 required");
    if (!(cfg.h > 0.0))
        throw std::invalid_argument("dp_hit_probability: needs h > 0");
    StepLaw law = step_law(cfg);
    HitEstimate est;
    est.horizon = certified_horizon(cfg, L, residual_target, &est.residual);
    est.n_walks = 0;
    // occupation probabilities on [-L+1, horizon], absorbing at -L
    int lo = -L, hi = est.horizon;
    std::vector<double> occ(static_cast<size_t>(hi - lo + 1), 0.0),
        nxt(static_cast<size_t>(hi - lo + 1), 0.0);
    auto idx = [&](int s) { return static_cast<size_t>(s - lo); };
    occ[idx(0)] = 1.0;
    double absorbed = 0.0;
    double pu = law.proj_up(), pd = law.proj_down(), ps = law.proj_stay();
    for (int n = 0; n < est.horizon; ++n) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int s = lo + 1; s <= hi - 1; ++s) {
            double w = occ[idx(s)];
            if (w == 0.0) continue;
            nxt[idx(s + 1)] += w * pu;
            nxt[idx(s)] += w * ps;
            if (s - 1 == -L) absorbed += w * pd;
            else nxt[idx(s - 1)] += w * pd;
        }
        occ.swap(nxt);
    }
    est.freq = absorbed;
    return est;
}

} // namespace rwrp
