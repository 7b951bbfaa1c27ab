#include "rwrp/potential.hpp"

#include <algorithm>
#include <cmath>

namespace rwrp {

PotentialSpec bernoulli_potential(double rho, double v) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("bernoulli: rho in [0,1]");
    if (!(v >= 0.0)) throw std::invalid_argument("bernoulli: v >= 0");
    PotentialSpec s;
    s.kind = PotentialKind::Bernoulli;
    s.rho = rho;
    s.v = v;
    return s;
}

PotentialSpec exponential_potential() {
    PotentialSpec s;
    s.kind = PotentialKind::ExponentialMean1;
    return s;
}

PotentialSpec point_mass_potential(double v) {
    if (!(v >= 0.0)) throw std::invalid_argument("point_mass: v >= 0");
    PotentialSpec s;
    s.kind = PotentialKind::PointMass;
    s.v = v;
    return s;
}

PotentialSpec trap_limit_potential(double beta_prime) {
    if (!(beta_prime >= 0.0)) throw std::invalid_argument("trap_limit: beta' >= 0");
    PotentialSpec s;
    s.kind = PotentialKind::TrapLimit;
    s.beta_prime = beta_prime;
    return s;
}

PotentialSpec tabulated_potential(std::vector<std::pair<double, double>> grid) {
    if (grid.size() < 2 || grid.front().first != 0.0 || grid.front().second != 0.0)
        throw std::invalid_argument("tabulated: need >= 2 knots starting at (0,0)");
    for (size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i].first > grid[i - 1].first))
            throw std::invalid_argument("tabulated: knot abscissae must increase");
        if (!(grid[i].second >= grid[i - 1].second))
            throw std::invalid_argument("tabulated: phi must be nondecreasing");
    }
    PotentialSpec s;
    s.kind = PotentialKind::Tabulated;
    s.grid = std::move(grid);
    return s;
}

double phi_raw(const PotentialSpec& spec, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("phi: t >= 0 required");
    switch (spec.kind) {
        case PotentialKind::Bernoulli:
            return -std::log1p(spec.rho * std::expm1(-t * spec.v));
        case PotentialKind::ExponentialMean1:
            return std::log1p(t);
        case PotentialKind::PointMass:
            return t * spec.v;
        case PotentialKind::TrapLimit:
            return t > 0.0 ? spec.beta_prime : 0.0;
        case PotentialKind::Tabulated: {
            const auto& g = spec.grid;
            if (t <= g.front().first) return g.front().second;
            for (size_t i = 1; i < g.size(); ++i) {
                if (t <= g[i].first) {
                    double w = (t - g[i - 1].first) / (g[i].first - g[i - 1].first);
                    return g[i - 1].second + w * (g[i].second - g[i - 1].second);
                }
            }
            // extrapolate with the last slope (keeps monotone + concave)
            size_t n = g.size();
            double slope = (g[n - 1].second - g[n - 2].second) /
                           (g[n - 1].first - g[n - 2].first);
            return g[n - 1].second + slope * (t - g[n - 1].first);
        }
    }
    throw std::logic_error("phi_raw: unknown potential kind");
}

double phi(const PotentialSpec& spec, double beta, double t) {
    if (!(beta >= 0.0)) throw std::invalid_argument("phi: beta >= 0 required");
    return phi_raw(spec, beta * t);
}

double ess_sup_v(const PotentialSpec& spec) {
    switch (spec.kind) {
        case PotentialKind::Bernoulli: return spec.rho > 0.0 ? spec.v : 0.0;
        case PotentialKind::PointMass: return spec.v;
        default: return std::numeric_limits<double>::infinity();
    }
}

PotentialValidation validate_spec(const PotentialSpec& spec) {
    PotentialValidation val;
    const double tol = 1e-9;
    // log-spaced probe grid plus 0
    std::vector<double> t{0.0};
    for (double x = 1e-4; x <= 1e6; x *= 2.0) t.push_back(x);
    std::vector<double> p;
    p.reserve(t.size());
    for (double x : t) p.push_back(phi_raw(spec, x));

    bool ok = true;
    if (std::abs(p[0]) > tol) {
        ok = false;
        val.notes.push_back("phi(0) != 0");
    }
    for (size_t i = 1; i < t.size(); ++i)
        if (p[i] < p[i - 1] - tol) {
            ok = false;
            val.notes.push_back("phi not nondecreasing");
            break;
        }
    // concavity: difference quotients must not increase with t
    for (size_t i = 2; i < t.size(); ++i) {
        double q1 = (p[i - 1] - p[i - 2]) / (t[i - 1] - t[i - 2]);
        double q2 = (p[i] - p[i - 1]) / (t[i] - t[i - 1]);
        if (q2 > q1 + tol) {
            ok = false;
            val.notes.push_back("phi not concave");
            break;
        }
    }
    val.ok = ok;

    // growth flag: did phi keep growing across the largest probe decade?
    size_t n = t.size();
    val.phi_unbounded = (p[n - 1] > p[n - 4] + tol);
    if (!val.phi_unbounded)
        val.notes.push_back("phi bounded (zero-mass atom / trap-type): growth assumption fails");
    // sublinearity: phi(t)/t must keep shrinking and end tiny relative to slope 1
    double r_last = p[n - 1] / t[n - 1], r_prev = p[n - 4] / t[n - 4];
    val.sublinear = (r_last < 0.5 * r_prev + tol) || (r_last < 1e-6);
    if (!val.sublinear)
        val.notes.push_back("phi not sublinear: ballistic-formula assumption fails");
    return val;
}

double Environment::value(uint64_t site_key) const {
    uint64_t z = mix64(seed ^ mix64(site_key ^ 0x6a09e667f3bcc909ULL));
    double u = (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    switch (spec.kind) {
        case PotentialKind::Bernoulli:
            return u < spec.rho ? spec.v : 0.0;
        case PotentialKind::ExponentialMean1:
            return -std::log(u);
        case PotentialKind::PointMass:
            return spec.v;
        case PotentialKind::TrapLimit:
            // E[e^{-tV}] = e^{-beta'} for every t>0: V = infinity w.p. 1-e^{-beta'}
            return u < -std::expm1(-spec.beta_prime)
                       ? std::numeric_limits<double>::infinity()
                       : 0.0;
        case PotentialKind::Tabulated:
            throw std::invalid_argument("Environment: tabulated phi has no sampling law");
    }
    throw std::logic_error("Environment: unknown potential kind");
}

double quenched_energy(const Path& path, const Environment& env, double beta,
                       int M, int N) {
    if (!(beta >= 0.0)) throw std::invalid_argument("quenched_energy: beta >= 0");
    if (beta == 0.0) return 0.0;
    LocalTimeField f = local_times(path, M, N);
    double e = 0.0;
    for (auto& kv : f.counts) e += kv.second * env.value(kv.first);
    return beta * e;
}

double annealed_energy(const Path& path, const PotentialSpec& spec, double beta,
                       int M, int N) {
    LocalTimeField f = local_times(path, M, N);
    double e = 0.0;
    for (auto& kv : f.counts) e += phi(spec, beta, kv.second);
    return e;
}

namespace {

LocalTimeField shifted_local_times(const Path& p, const std::array<int, 8>& dy) {
    Path q = p;
    for (int i = 1; i < p.d; ++i) q.start[static_cast<size_t>(i)] += dy[static_cast<size_t>(i)];
    if (p.d >= 2 && dy[0] != 0)
        throw std::invalid_argument("replica offset must be perpendicular (dy[0] == 0)");
    return local_times(q);
}

} // namespace

double coupled_energy(const Path& p1, const Path& p2, const PotentialSpec& spec,
                      double beta, const std::array<int, 8>& dy) {
    if (p1.d != p2.d) throw std::invalid_argument("coupled_energy: dimension mismatch");
    LocalTimeField f1 = local_times(p1);
    LocalTimeField f2 = shifted_local_times(p2, dy);
    for (auto& kv : f2.counts) f1.counts[kv.first] += kv.second;
    double e = 0.0;
    for (auto& kv : f1.counts) e += phi(spec, beta, kv.second);
    return e;
}

OverlapStats overlap_stats(const Path& p1, const Path& p2, const PotentialSpec& spec,
                           double beta, const std::array<int, 8>& dy) {
    if (p1.d != p2.d) throw std::invalid_argument("overlap_stats: dimension mismatch");
    LocalTimeField f1 = local_times(p1);
    LocalTimeField f2 = shifted_local_times(p2, dy);
    OverlapStats st;
    double phi1 = 0.0, phi2 = 0.0, phic = 0.0;
    for (auto& kv : f1.counts) phi1 += phi(spec, beta, kv.second);
    for (auto& kv : f2.counts) phi2 += phi(spec, beta, kv.second);
    LocalTimeField merged = f1;
    for (auto& kv : f2.counts) {
        auto it = f1.counts.find(kv.first);
        if (it != f1.counts.end()) st.l_overlap += it->second + kv.second;
        merged.counts[kv.first] += kv.second;
    }
    for (auto& kv : merged.counts) phic += phi(spec, beta, kv.second);
    st.psi = phi1 + phi2 - phic;
    return st;
}

} // namespace rwrp
