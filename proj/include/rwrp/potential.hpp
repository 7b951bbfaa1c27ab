#pragma once
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rwrp/walk.hpp"

namespace rwrp {

// Disorder law for the site potentials V_x >= 0 together with its annealed
// transform phi(t) = -log E[exp(-t V)].  The per-visit weight of a path is
// exp(-sum_x phi(beta * ell_x)).
enum class PotentialKind {
    Bernoulli,         // V = v with prob rho, else 0
    ExponentialMean1,  // V ~ Exp(1)
    PointMass,         // V = v surely (phi linear; not sublinear)
    TrapLimit,         // phi(t) = beta' 1{t>0} (range-counting limit)
    Tabulated,         // user-supplied concave phi knots
};

struct PotentialSpec {
    PotentialKind kind = PotentialKind::ExponentialMean1;
    double rho = 0.5;          // Bernoulli mixing weight
    double v = 1.0;            // Bernoulli / PointMass atom
    double beta_prime = 1.0;   // TrapLimit height
    // Tabulated: (t, phi(t)) knots, t increasing, first knot (0, 0)
    std::vector<std::pair<double, double>> grid;
};

PotentialSpec bernoulli_potential(double rho, double v);
PotentialSpec exponential_potential();
PotentialSpec point_mass_potential(double v);
PotentialSpec trap_limit_potential(double beta_prime);
PotentialSpec tabulated_potential(std::vector<std::pair<double, double>> grid);

// phi(t) itself
double phi_raw(const PotentialSpec& spec, double t);
// phi_beta(t) = phi(beta * t); requires beta >= 0, t >= 0
double phi(const PotentialSpec& spec, double beta, double t);

// ess sup of V (infinity when unbounded); used by concentration bounds
double ess_sup_v(const PotentialSpec& spec);

struct PotentialValidation {
    bool ok = false;                 // phi(0)=0, nondecreasing, concave
    bool phi_unbounded = false;      // phi(t) -> infinity (no zero-mass atom)
    bool sublinear = false;          // phi(t)/t -> 0
    std::vector<std::string> notes;
};

// numeric probe of the standing assumptions on a log-spaced grid
PotentialValidation validate_spec(const PotentialSpec& spec);

// Quenched disorder: V at a site is a pure function of (master seed, site),
// materialized lazily, so concurrent readers always agree.
struct Environment {
    PotentialSpec spec;
    uint64_t seed = 0;

    double value(uint64_t site_key) const;
};

// beta * sum_x ell_x V_x over the window (M, N]; +infinity is propagated
double quenched_energy(const Path& path, const Environment& env, double beta,
                       int M, int N);
inline double quenched_energy(const Path& path, const Environment& env, double beta) {
    return quenched_energy(path, env, beta, 0, path.length());
}

// sum_x phi(beta * ell_x(M, N))
double annealed_energy(const Path& path, const PotentialSpec& spec, double beta,
                       int M, int N);
inline double annealed_energy(const Path& path, const PotentialSpec& spec, double beta) {
    return annealed_energy(path, spec, beta, 0, path.length());
}

// coupled two-replica energy sum_x phi(beta * (ell^1_x + ell^2_x)); the second
// path's sites are shifted by offset dy in the coordinates 2..d
double coupled_energy(const Path& p1, const Path& p2, const PotentialSpec& spec,
                      double beta, const std::array<int, 8>& dy);
inline double coupled_energy(const Path& p1, const Path& p2,
                             const PotentialSpec& spec, double beta) {
    return coupled_energy(p1, p2, spec, beta, std::array<int, 8>{});
}

struct OverlapStats {
    double psi = 0.0;        // Phi^1 + Phi^2 - coupled Phi  (>= 0)
    long long l_overlap = 0; // sum over common sites of ell^1 + ell^2
};

OverlapStats overlap_stats(const Path& p1, const Path& p2, const PotentialSpec& spec,
                           double beta, const std::array<int, 8>& dy);
inline OverlapStats overlap_stats(const Path& p1, const Path& p2,
                                  const PotentialSpec& spec, double beta) {
    return overlap_stats(p1, p2, spec, beta, std::array<int, 8>{});
}

} // namespace rwrp
