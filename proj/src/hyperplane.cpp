#include "rwrp/hyperplane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwrp/enumerate.hpp"
#include "rwrp/fit.hpp"

namespace rwrp {

bool projection_measurable(const PotentialSpec& spec, double beta) {
    return beta == 0.0 || spec.kind == PotentialKind::PointMass;
}

double per_step_gamma(const PotentialSpec& spec, double beta) {
    if (beta == 0.0) return 1.0;
    if (spec.kind == PotentialKind::PointMass) return std::exp(-beta * spec.v);
    throw std::logic_error("per_step_gamma: weight is not a function of the step count");
}

namespace {

constexpr double kBigObjective = 1e300;

// sup of the interval of theta with gamma * rho_theta < 1: with u = e^theta
// the boundary solves gamma*(p- u^2 + s u + p+/u ... ) i.e. the quadratic
// gamma*p- u^2 + (gamma*s - 1) u + gamma*p+ = 0, larger root; for gamma = 1
// this reduces to u+ = p+/p- = e^{2h}.  Returns 0 when the interval is empty.
double theta_domain_sup(const WalkConfig& cfg, double gamma) {
    StepLaw law = step_law(cfg);
    double s = law.proj_stay();
    double b = 1.0 - gamma * s;
    double disc = b * b - 4.0 * gamma * gamma * law.p_plus * law.p_minus;
    if (disc <= 0.0) return 0.0;
    double u = (b + std::sqrt(disc)) / (2.0 * gamma * law.p_minus);
    return u > 1.0 ? std::log(u) : 0.0;
}

// min over theta>0 of e^{theta L} rho_theta^{n+1}/(1-rho_theta), the dropped-
// step-count bound for the projected walk; requires drift (rho_theta < 1).
double chernoff_step_tail(const WalkConfig& cfg, int L, int n, double* theta_out) {
    auto objective = [&](double th) {
        double rho = proj_mgf_neg(cfg, th);
        if (rho >= 1.0 - 1e-14) return kBigObjective;
        double logv = th * L + (n + 1) * std::log(rho) - std::log1p(-rho);
        return logv;
    };
    double th_sup = theta_domain_sup(cfg, 1.0);
    if (th_sup <= 0.0) {
        if (theta_out) *theta_out = 0.0;
        return std::numeric_limits<double>::infinity();
    }
    double th = golden_section_min(objective, 1e-9 * th_sup, th_sup * (1.0 - 1e-9));
    double val = objective(th);
    if (theta_out) *theta_out = th;
    return val >= kBigObjective ? std::numeric_limits<double>::infinity()
                                : std::exp(val);
}

// same with a per-step discount gamma (usable at zero drift when gamma < 1;
// theta = 0 is then interior to the finite domain)
double chernoff_damped_tail(const WalkConfig& cfg, double gamma, int L, int n,
                            double* theta_out) {
    auto objective = [&](double th) {
        double rho = gamma * proj_mgf_neg(cfg, th);
        if (rho >= 1.0 - 1e-14) return kBigObjective;
        return th * L + (n + 1) * std::log(rho) - std::log1p(-rho);
    };
    double th_sup = theta_domain_sup(cfg, gamma);
    if (th_sup <= 0.0) {
        if (theta_out) *theta_out = 0.0;
        return std::numeric_limits<double>::infinity();
    }
    double th = golden_section_min(objective, 0.0, th_sup * (1.0 - 1e-9));
    double val = objective(th);
    if (theta_out) *theta_out = th;
    return val >= kBigObjective ? std::numeric_limits<double>::infinity()
                                : std::exp(val);
}

// ---------------------------------------------------------------------------
// general-potential bridge DFS: accumulates the whole span/mask series up to
// a step horizon fixed by the node budget, with a slab-resolvent bound on the
// dropped (longer) bridges.
// ---------------------------------------------------------------------------
struct SeriesDfs {
    StepLaw law;
    int d, Lmax, n_max;
    std::vector<double> phi_tab;
    std::vector<std::vector<double>> w;  // w[L][mask]
    double tail_prob = 0.0;              // slab-survival mass beyond n_max
    double nodes = 0.0, budget = 0.0;

    std::array<int, 8> pos{};
    int height = 0, runmax = 0;
    uint64_t covmask = 0;
    FlatCounter counts{1024};
    std::vector<uint64_t> order;
    std::vector<double> prob_stack;
    int depth = 0;

    SeriesDfs(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
              int Lmax_, double budget_)
        : law(step_law(cfg)), d(cfg.d), Lmax(Lmax_), budget(budget_) {
        if (Lmax < 1 || Lmax > 62)
            throw std::invalid_argument("bridge series: span limit out of range");
        // pick the step horizon from an exact count of slab-confined nodes
        std::vector<double> ways(static_cast<std::size_t>(Lmax) + 2, 0.0);
        ways[1] = 1.0;  // forced first step +e1
        double cum = 1.0 + 1.0;  // root + the forced node
        n_max = 1;
        double lazy = 2.0 * d - 2.0;
        while (n_max < 4000) {
            std::vector<double> nxt(ways.size(), 0.0);
            double layer = 0.0;
            for (int s = 1; s <= Lmax; ++s) {
                double m = ways[static_cast<std::size_t>(s)];
                if (m == 0.0) continue;
                if (s + 1 <= Lmax) nxt[static_cast<std::size_t>(s) + 1] += m;
                if (s - 1 >= 1) nxt[static_cast<std::size_t>(s) - 1] += m;
                nxt[static_cast<std::size_t>(s)] += m * lazy;
            }
            for (double m : nxt) layer += m;
            if (cum + layer > budget) break;
            cum += layer;
            ways.swap(nxt);
            ++n_max;
        }
        if (n_max < Lmax)
            throw BudgetExceeded(cum, budget);
        phi_tab.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
        for (int c = 1; c <= n_max; ++c)
            phi_tab[static_cast<std::size_t>(c)] = phi(spec, beta, c);
        w.assign(static_cast<std::size_t>(Lmax) + 1, {});
        for (int L = 0; L <= Lmax; ++L)
            w[static_cast<std::size_t>(L)].assign(
                std::size_t{1} << (L >= 1 ? L - 1 : 0), 0.0);
        prob_stack.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
        prob_stack[0] = 1.0;
    }

    double energy() const {
        double e = 0.0;
        for (uint64_t key : order)
            e += phi_tab[static_cast<std::size_t>(counts.at(key))];
        return e;
    }

    void run() {
        recurse();
        // probability mass of slab-confined projections still alive beyond the
        // horizon; bounds every dropped (longer) bridge of any span <= Lmax
        std::vector<double> marg(static_cast<std::size_t>(Lmax), 0.0);
        marg[0] = law.proj_up();
        SlabChain chain(law, Lmax, 1.0);
        for (int t = 1; t < n_max; ++t) chain.apply(marg);
        tail_prob = slab_tail(chain, marg);
    }

    void recurse() {
        nodes += 1.0;
        if (nodes > budget * 1.000001 + 16.0) throw BudgetExceeded(nodes, budget);
        int t = depth;
        if (t >= 1 && height == runmax) {
            // a span-(runmax) bridge ends here
            w[static_cast<std::size_t>(runmax)][static_cast<std::size_t>(covmask)] +=
                prob_stack[static_cast<std::size_t>(t)] * std::exp(-energy());
        }
        if (t == n_max) return;
        int two_d = 2 * d;
        for (int e = 0; e < two_d; ++e) {
            int axis = e >> 1;
            int dir = (e & 1) ? -1 : +1;
            int nh = height + (axis == 0 ? dir : 0);
            if (nh < 1 || nh > Lmax) continue;
            int nm = nh > runmax ? nh : runmax;
            if (nm - nh > n_max - (t + 1)) continue;  // cannot top out in time
            pos[axis] += dir;
            uint64_t key = pack_site(pos.data(), d);
            int old_h = height, old_m = runmax;
            uint64_t old_cov = covmask;
            height = nh;
            if (nh > runmax) {
                runmax = nh;
            } else {
                int lo = nh > 1 ? nh : 1;
                for (int r = lo; r <= runmax - 1; ++r)
                    covmask |= uint64_t{1} << (r - 1);
            }
            if (counts.increment(key) == 0) order.push_back(key);
            prob_stack[static_cast<std::size_t>(t) + 1] =
                prob_stack[static_cast<std::size_t>(t)] * law.step_prob(e);
            ++depth;

            recurse();

            --depth;
            if (counts.decrement(key) == 0) order.pop_back();
            height = old_h;
            runmax = old_m;
            covmask = old_cov;
            pos[axis] -= dir;
        }
    }
};

// per-L certified remainder of the DFS series
double dfs_tail_at(double phi1, double tail_prob, int L) {
    return std::exp(-phi1 * L) * tail_prob;
}

} // namespace

BridgeSeries bridge_span_series(const WalkConfig& cfg, const PotentialSpec& spec,
                                double beta, int Lmax, double tol, double budget) {
    BridgeSeries out;
    out.phi1 = phi(spec, beta, 1.0);
    if (projection_measurable(spec, beta)) {
        double gamma = per_step_gamma(spec, beta);
        out.series = span_series(step_law(cfg), Lmax, gamma);
        out.engine = "automaton";
        if (out.series.tail > tol)
            throw ToleranceUnreachable("bridge series: automaton remainder above tolerance",
                                       out.series.tail);
        return out;
    }
    SeriesDfs dfs(cfg, spec, beta, Lmax, budget);
    dfs.run();
    out.series.Lmax = Lmax;
    out.series.w = std::move(dfs.w);
    out.series.steps = dfs.n_max;
    out.series.tail = dfs_tail_at(out.phi1, dfs.tail_prob, 1);
    out.engine = "dfs";
    if (out.series.tail > tol)
        throw ToleranceUnreachable("bridge series: step horizon leaves remainder above tolerance",
                                   out.series.tail);
    return out;
}

namespace {

PlaneSum endpoint_dp(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
                     int L, double tol, double budget) {
    StepLaw law = step_law(cfg);
    double gamma = per_step_gamma(spec, beta);
    double phi1 = phi(spec, beta, 1.0);
    if (cfg.h == 0.0 && gamma >= 1.0)
        throw std::invalid_argument("endpoint series diverges at zero drift, zero damping");
    PlaneSum out;
    out.engine = "dp";
    int cap = 1 << 20;
    std::vector<double> v(1, 1.0);  // heights -n..n, n = 0
    double cost = 0.0;
    for (int n = 1; n < cap; ++n) {
        std::vector<double> nv(2 * static_cast<std::size_t>(n) + 1, 0.0);
        for (int s = -(n - 1); s <= n - 1; ++s) {
            double m = v[static_cast<std::size_t>(s + n - 1)];
            if (m == 0.0) continue;
            nv[static_cast<std::size_t>(s + 1 + n)] += m * law.proj_up() * gamma;
            nv[static_cast<std::size_t>(s - 1 + n)] += m * law.proj_down() * gamma;
            nv[static_cast<std::size_t>(s + n)] += m * law.proj_stay() * gamma;
        }
        v.swap(nv);
        cost += static_cast<double>(2 * n + 1);
        if (cost > budget) throw BudgetExceeded(cost, budget);
        if (n >= L) {
            out.value += v[static_cast<std::size_t>(L + n)];
            double th_damp = 0.0, th_spec = 0.0;
            double damp = chernoff_damped_tail(cfg, gamma, L, n, &th_damp);
            double spec_t =
                std::exp(-phi1 * L) * chernoff_step_tail(cfg, L, n, &th_spec);
            out.certified_tail = std::min(damp, spec_t);
            out.theta = damp <= spec_t ? th_damp : th_spec;
            out.n_max = n;
            if (out.certified_tail <= tol) return out;
        }
    }
    throw ToleranceUnreachable("endpoint series: tolerance not reached", out.certified_tail);
}

PlaneSum endpoint_dfs(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
                      int L, double tol, double budget) {
    // full-lattice enumeration, duration by duration, inside one tree walk
    int two_d = 2 * cfg.d;
    int n_max = 0;
    double cum = 1.0, layer = 1.0;
    while (n_max < 40) {
        layer *= two_d;
        if (cum + layer > budget) break;
        cum += layer;
        ++n_max;
    }
    if (n_max < L) throw BudgetExceeded(cum + layer, budget);
    double phi1 = phi(spec, beta, 1.0);
    std::vector<double> by_duration(static_cast<std::size_t>(n_max) + 1, 0.0);

    struct Dfs {
        StepLaw law;
        int d, L, n_max;
        std::vector<double> phi_tab;
        std::array<int, 8> pos{};
        int height = 0, depth = 0;
        FlatCounter counts{1024};
        std::vector<uint64_t> order;
        std::vector<double> prob_stack;
        std::vector<double>* acc = nullptr;

        Dfs(StepLaw law_, int d_, int L_, int nmax_)
            : law(law_), d(d_), L(L_), n_max(nmax_) {}

        double energy() const {
            double e = 0.0;
            for (uint64_t key : order)
                e += phi_tab[static_cast<std::size_t>(counts.at(key))];
            return e;
        }
        void recurse() {
            if (depth >= 1 && height == L)
                (*acc)[static_cast<std::size_t>(depth)] +=
                    prob_stack[static_cast<std::size_t>(depth)] * std::exp(-energy());
            if (depth == n_max) return;
            for (int e = 0; e < 2 * d; ++e) {
                int axis = e >> 1;
                int dir = (e & 1) ? -1 : +1;
                pos[axis] += dir;
                if (axis == 0) height += dir;
                uint64_t key = pack_site(pos.data(), d);
                if (counts.increment(key) == 0) order.push_back(key);
                prob_stack[static_cast<std::size_t>(depth) + 1] =
                    prob_stack[static_cast<std::size_t>(depth)] * law.step_prob(e);
                ++depth;
                recurse();
                --depth;
                if (counts.decrement(key) == 0) order.pop_back();
                if (axis == 0) height -= dir;
                pos[axis] -= dir;
            }
        }
    };
    Dfs dfs(step_law(cfg), cfg.d, L, n_max);
    dfs.phi_tab.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int c = 1; c <= n_max; ++c)
        dfs.phi_tab[static_cast<std::size_t>(c)] = phi(spec, beta, c);
    dfs.prob_stack.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    dfs.prob_stack[0] = 1.0;
    dfs.acc = &by_duration;
    dfs.recurse();

    PlaneSum out;
    if (cfg.h > 0.0) {
        out.engine = "dfs";
        for (int n = L; n <= n_max; ++n) {
            out.value += by_duration[static_cast<std::size_t>(n)];
            out.n_max = n;
            out.certified_tail =
                std::exp(-phi1 * L) * chernoff_step_tail(cfg, L, n, &out.theta);
            if (out.certified_tail <= tol) return out;
        }
        throw ToleranceUnreachable("endpoint series: horizon too short for tolerance",
                                   out.certified_tail);
    }
    // zero drift: flagged heuristic stopping on K consecutive small increments
    constexpr int K = 3;
    out.engine = "dfs-heuristic";
    out.heuristic = true;
    int consecutive = 0;
    for (int n = L; n <= n_max; ++n) {
        double inc = by_duration[static_cast<std::size_t>(n)];
        out.value += inc;
        out.n_max = n;
        consecutive = (inc < tol / 10.0) ? consecutive + 1 : 0;
        if (consecutive >= K) {
            double recent = 0.0;
            for (int j = 0; j < K; ++j)
                recent += by_duration[static_cast<std::size_t>(n - j)];
            out.certified_tail = recent;  // estimate only (heuristic flag set)
            return out;
        }
    }
    throw ToleranceUnreachable("endpoint series: heuristic stopping never engaged",
                               by_duration[static_cast<std::size_t>(n_max)]);
}

} // namespace

PlaneSum truncated_point_to_plane(const WalkConfig& cfg, const PotentialSpec& spec,
                                  double beta, int L, PlaneKind kind, double tol,
                                  double budget) {
    if (L < 1) throw std::invalid_argument("point-to-plane: L must be >= 1");
    if (kind == PlaneKind::EndpointG) {
        return projection_measurable(spec, beta)
                   ? endpoint_dp(cfg, spec, beta, L, tol, budget)
                   : endpoint_dfs(cfg, spec, beta, L, tol, budget);
    }
    // bridge-type kinds share the span/mask series
    BridgeSeries bs = bridge_span_series(cfg, spec, beta, L,
                                         std::numeric_limits<double>::infinity(),
                                         budget);
    // the stored scalar remainder is the span-1 (worst) value; the per-site
    // envelope sharpens it by e^{-phi_beta(1)} per extra level for the DFS
    double t1 = bs.engine == "automaton"
                    ? bs.series.tail
                    : bs.series.tail * std::exp(-bs.phi1 * (L - 1));
    PlaneSum out;
    out.engine = bs.engine;
    out.n_max = bs.series.steps;
    out.heuristic = bs.heuristic;
    double b = bs.series.bridge(L);
    switch (kind) {
        case PlaneKind::BridgeB:
            out.value = b;
            out.certified_tail = t1;
            break;
        case PlaneKind::IrreducibleLambda:
            out.value = bs.series.irreducible(L);
            out.certified_tail = t1;
            break;
        case PlaneKind::BridgeB2:
            out.value = b * b;
            out.certified_tail = 2.0 * b * t1 + t1 * t1;
            break;
        case PlaneKind::IrreducibleLambda2:
            out.value = bs.series.irreducible2(L);
            out.certified_tail = 2.0 * b * t1 + t1 * t1;
            break;
        case PlaneKind::EndpointG:
            break;  // handled above
    }
    if (out.certified_tail > tol)
        throw ToleranceUnreachable("point-to-plane: certified remainder above tolerance",
                                   out.certified_tail);
    return out;
}

} // namespace rwrp
