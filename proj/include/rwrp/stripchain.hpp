#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "rwrp/fit.hpp"
#include "rwrp/potential.hpp"
#include "rwrp/rng.hpp"
#include "rwrp/walk.hpp"

namespace rwrp {

// N-step decay rate of G(N) used to tilt strip weights: exact for beta = 0
// (zero) and PointMass (beta*v); otherwise a slope fit over an exact small-N
// sequence.
double n_step_mass(const WalkConfig& cfg, const PotentialSpec& spec,
                   double beta);

// One two-walk irreducible strip class: leg durations, end-offset increment
// (second walk's perpendicular displacement minus the first's; the absolute
// end offset is the class offset plus d_off), and the shared-visit count.
struct StripEntry {
    int n1 = 0;
    int n2 = 0;
    std::array<int, 8> d_off{};
    int zeta = 0;
    double p = 0.0;
};

// Transition table of the strip chain for one start-offset class.  Entries
// are exhaustive over pairs with n1+n2 <= cutoff; captured is their total
// mass (<= 1, approaching 1 as the cutoff grows).  For ||offset||_1 > cutoff
// the walks cannot meet, so one shared far-class table (zeta = 0 throughout)
// serves every such offset.
struct StripTable {
    std::array<int, 8> offset{};
    bool far_class = false;
    int cutoff = 0;
    double m_hat = 0.0;
    double captured = 0.0;
    std::vector<StripEntry> entries;
    std::vector<double> cum;  // prefix sums of entries[i].p for sampling
};

StripTable build_strip_table(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, const std::array<int, 8>& dy,
                             int cutoff);

struct StripDraw {
    int n1 = 0;
    int n2 = 0;
    std::array<int, 8> d_off{};
    int zeta = 0;
};

// Chain driver.  Two engines sample the same kernel:
//   - enumerated: alias tables per offset class from build_strip_table
//     (any potential; cutoffs limited by pair enumeration);
//   - sampled: transfer-matrix class probabilities over (span, duration,
//     cover-mask) with legs drawn exactly by backward sampling, reaching far
//     larger cutoffs; exact-tilt potentials only (beta = 0 or PointMass).
class StripTableSet {
  public:
    static StripTableSet enumerated(const WalkConfig& cfg,
                                    const PotentialSpec& spec, double beta,
                                    int cutoff);
    static StripTableSet sampled(const WalkConfig& cfg,
                                 const PotentialSpec& spec, double beta,
                                 int span_max, int cutoff);
    ~StripTableSet();
    StripTableSet(StripTableSet&&) noexcept;
    StripTableSet& operator=(StripTableSet&&) noexcept;

    // one strip started at perpendicular offset delta; false means the
    // uncaptured remainder was drawn (unknown outcome)
    bool draw(const std::array<int, 8>& delta, RngStream& rng, StripDraw* out);

    double capture() const;  // capture of the offset-independent weight layout
    double rho_cap() const;  // cutoff + 2 dominates any captured rho
    // conditional trigger value charged to an unknown draw: an analytic bound
    // on the tilted mass of uncaptured classes divided by their probability
    // (+inf when the bounding series diverges)
    double unknown_value() const;
    double phi1() const;     // phi_beta(1)
    double m_hat() const;
    int cutoff() const;
    int dim() const;

  private:
    StripTableSet();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SigmaChainStats {
    long long n_runs = 0;
    long long max_steps = 0;
    // plug-in E[exp(phi1 * rho_sigma1); sigma1 < inf], with uncaptured draws
    // counted as immediate triggers at rho_cap (conservative)
    double contraction = 0.0;
    double contraction_se = 0.0;
    double contraction_ci_hi = 0.0;  // mean + 1.96 se
    // ci_hi plus an estimate of triggers past the horizon: the fitted
    // power-law tail of sigma1 extrapolated beyond max_steps (or the whole
    // residual fraction when the fit is unusable), poisoned at rho_cap
    double conservative_upper = 0.0;
    double residual_frac = 0.0;  // runs alive at max_steps
    double unknown_frac = 0.0;   // runs ended by an uncaptured draw
    double p_sigma1 = 0.0;       // triggered fraction (unknowns excluded)
    double rho_cap = 0.0;
    double mean_rho = 0.0;  // mean rho at genuine triggers
    std::vector<double> sigma1_pmf;  // P[sigma1 = i], i = 1.. (index i-1)
    LineFit tail_fit;  // log P[sigma1 = m+1] against log m, m >= 1
    bool slope_ok = false;  // fitted slope <= -1 within its 95% band
};

// Runs the chain n_runs times from coincident start columns (delta = 0).
// Throws when the kernel's uncaptured mass exceeds max_uncaptured.
SigmaChainStats simulate_sigma_chain(StripTableSet& tables, long long n_runs,
                                     long long max_steps, RngStream stream,
                                     double max_uncaptured = 0.5);

// Pathwise renewal bound on enumerated bridge pairs: along each pair's strip
// decomposition, exp(-coupled Phi) * exp(m_hat (N1+N2)) <= exp(phi1 sum rho).
struct StripCheckReport {
    long long pairs_checked = 0;
    int violations = 0;
    double max_log_excess = 0.0;  // max of log lhs - log rhs (<= 0 when ok)
    double m_hat = 0.0;
};

StripCheckReport strip_inequality_check(const WalkConfig& cfg,
                                        const PotentialSpec& spec, double beta,
                                        int N1, int N2,
                                        const std::array<int, 8>& dy,
                                        double budget);

} // namespace rwrp
