#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rwrp/potential.hpp"
#include "rwrp/rng.hpp"
#include "rwrp/walk.hpp"

namespace rwrp {

// Persisted result of a sampling estimator.  stderr_ is the sample standard
// deviation over the n_samples top-level samples divided by sqrt(n_samples).
// (seed, stream_id, params) replay the estimate bit-identically; wall_ms is
// informational and excluded from persisted semantic fields.
struct EstimateRecord {
    std::string quantity;
    std::string params;  // canonical "key=value,..." list
    long long n_samples = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    uint64_t master_seed = 0;
    uint64_t stream_id = 0;
    double wall_ms = 0.0;
};

// mean of exp(-Phi_beta) over n sampled N-step paths (unbiased for G(N)).
// Path i is drawn from stream.derive(i), so a run with the same (seed, id)
// and a different beta sees the same paths (common random numbers).
EstimateRecord mc_annealed_Z(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, int N, long long n,
                             RngStream stream);

struct QuenchedRun {
    std::vector<double> z_hat;   // per-environment path-MC estimate of Z
    std::vector<double> log_z;   // log z_hat
    double mean_log_z = 0.0;
    double se_log_z = 0.0;
    double mean_z = 0.0;  // env average; estimates the annealed value
    double se_z = 0.0;
    double jensen_gap = 0.0;  // log(mean_z) - mean_log_z, >= 0 exactly
    long long n_paths = 0;
    long long n_envs = 0;
    uint64_t master_seed = 0;
    uint64_t stream_id = 0;
};

QuenchedRun mc_quenched_logZ(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, int N, long long n_paths,
                             long long n_envs, RngStream stream);

// Plug-in estimate of E(Z^2)/(EZ)^2: pair-average of exp(-coupled Phi) over
// the product of the two single-path averages, on the same n_pairs samples.
// Bias is O(1/n_pairs); stderr_ comes from ~50 batch means of the ratio.
EstimateRecord mc_second_moment_ratio(const WalkConfig& cfg,
                                      const PotentialSpec& spec, double beta,
                                      int N, long long n_pairs,
                                      const std::array<int, 8>& dy,
                                      RngStream stream);

// Ratio curve over an N grid with common random numbers: pair i is sampled
// once at max(grid) and every grid point evaluates the length-N prefixes.
// kendall_* is the rank correlation of the batch-mean curves against N with
// a bootstrap 95% interval (resampling batches).
struct RatioCurve {
    std::vector<int> grid;
    std::vector<double> ratio;
    std::vector<double> stderr_;
    double kendall = 0.0;
    double kendall_lo = 0.0;
    double kendall_hi = 0.0;
    long long n_pairs = 0;
    uint64_t master_seed = 0;
    uint64_t stream_id = 0;
};

RatioCurve mc_ratio_curve(const WalkConfig& cfg, const PotentialSpec& spec,
                          double beta, const std::vector<int>& grid,
                          long long n_pairs, RngStream stream);

// E|log Z^qu - log Z^an| along a grid of N, with log Z^an estimated on the
// same path budget.  c_fit is the smallest c with gap(N) <= c(1+beta*sqrt(N))
// across the grid.  mean_log_zqu and log_g_hat feed rate comparisons.
struct GapCurve {
    std::vector<int> grid;
    std::vector<double> gap;
    std::vector<double> gap_se;
    std::vector<double> mean_log_zqu;
    std::vector<double> log_g_hat;   // log of annealed-MC mean
    std::vector<double> jensen_gap;  // per grid point, >= 0 exactly
    double c_fit = 0.0;
    bool envelope_ok = false;
    long long n_paths = 0;
    long long n_envs = 0;
    uint64_t master_seed = 0;
    uint64_t stream_id = 0;
};

GapCurve mc_free_energy_gap(const WalkConfig& cfg, const PotentialSpec& spec,
                            double beta, const std::vector<int>& grid,
                            long long n_paths, long long n_envs,
                            RngStream stream);

// Empirical check of P[Z >= EZ/2] >= (EZ)^2/(4 E Z^2) - 3 sigma with exact
// moments from enumeration and Z exact per sampled environment.
struct PZReport {
    double p_emp = 0.0;
    double p_se = 0.0;
    double rhs = 0.0;  // (EZ)^2 / (4 EZ^2) minus the MC slack
    double ez_exact = 0.0;
    double ez2_exact = 0.0;
    long long n_envs = 0;
    bool ok = false;
};

PZReport paley_zygmund_check(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, int N, long long n_envs,
                             RngStream stream);

// Tail of log Z^{qu,<=k} around its empirical median against the Gaussian
// envelope 4 exp(-t^2 / (16 beta^2 Vbar^2 k N)).  Z^{<=k} is exact per
// environment (restricted path table).  Throws std::invalid_argument when
// k < 1 (empty restricted event) or the potential is unbounded.
struct ConcReport {
    std::vector<double> t_grid;
    std::vector<double> emp_tail;
    std::vector<double> emp_se;
    std::vector<double> bound;
    double median = 0.0;
    double v_bar = 0.0;
    int violations = 0;  // emp_tail > bound + 3 se
    long long n_envs = 0;
    bool ok = false;
};

ConcReport concentration_check(const WalkConfig& cfg,
                               const PotentialSpec& spec, double beta,
                               double k, int N, long long n_envs,
                               RngStream stream);

} // namespace rwrp
