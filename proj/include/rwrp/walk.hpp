#pragma once
#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rwrp/rng.hpp"

namespace rwrp {

// Nearest-neighbour walk on Z^d whose step law is the drift-h exponential tilt
// of the simple walk along the first axis:
//   P[+e1] = e^h/Sigma,  P[-e1] = e^{-h}/Sigma,  P[+-e_j] = 1/Sigma (j >= 2),
//   Sigma = e^h + e^{-h} + 2d - 2.
struct WalkConfig {
    int d = 1;
    double h = 0.0;
};

struct StepLaw {
    int d;
    double h;
    double sigma;     // normalizer Sigma
    double p_plus;    // +e1
    double p_minus;   // -e1
    double p_perp;    // each of the 2d-2 perpendicular steps
    double log_p_plus, log_p_minus, log_p_perp;
    double lambda;    // log mgf of the drift: log(Sigma/(2d))

    // projected first-coordinate walk (lazy three-outcome walk)
    double proj_up() const { return p_plus; }
    double proj_down() const { return p_minus; }
    double proj_stay() const { return (2.0 * d - 2.0) * p_perp; }

    // probability of step index e in [0, 2d): axis e/2, direction +1 if e even
    double step_prob(int e) const {
        if (e == 0) return p_plus;
        if (e == 1) return p_minus;
        return p_perp;
    }
    double step_log_prob(int e) const {
        if (e == 0) return log_p_plus;
        if (e == 1) return log_p_minus;
        return log_p_perp;
    }
};

StepLaw step_law(const WalkConfig& cfg);

// speed of the projected walk, and the drift log-mgf lambda_h
double escape_prob(const WalkConfig& cfg);        // p_plus - p_minus
double lambda_drift(const WalkConfig& cfg);       // log(Sigma/(2d))
double hitting_prob_neg(const WalkConfig& cfg, int L); // P[hit -L] = e^{-2Lh}, h>0

// E_h[exp(-theta * S1(1))] for the projected step
double proj_mgf_neg(const WalkConfig& cfg, double theta);
// min over theta>0; attained at theta = h with value 2d/Sigma = e^{-lambda}
double chernoff_rho_min(const WalkConfig& cfg);

// A path is a step sequence; sites are derived from the start point.
// Step encoding: index e in [0, 2d), axis = e/2, direction +1 for even e.
struct Path {
    int d = 1;
    std::array<int, 8> start{};           // start site (first coordinate usually 0)
    std::vector<uint8_t> steps;

    int length() const { return static_cast<int>(steps.size()); }
};

// packed lattice site -> 64-bit key (16 bits/coord for d<=4, 8 bits for d<=8)
uint64_t pack_site(const int* x, int d);

struct LocalTimeField {
    std::unordered_map<uint64_t, int> counts;

    int at(uint64_t key) const {
        auto it = counts.find(key);
        return it == counts.end() ? 0 : it->second;
    }
    int range_size() const;       // number of sites with positive count
    long long total() const;      // sum of counts
    long long norm_sq() const;    // sum of squared counts
};

// visits in the time window (M, N]: site S(n) counted for n = M+1..N.
// Time 0 (the start site) is never counted by the full-path field (M = 0).
LocalTimeField local_times(const Path& path, int M, int N);
inline LocalTimeField local_times(const Path& path) {
    return local_times(path, 0, path.length());
}

// first-coordinate heights S1(0..N)
std::vector<int> proj_heights(const Path& path);

// visit the sites S(M+1..N); f(key, coords)
template <class F>
void for_each_site(const Path& path, int M, int N, F&& f) {
    if (M < 0 || N > path.length() || M > N)
        throw std::invalid_argument("for_each_site: window out of range");
    std::array<int, 8> x = path.start;
    for (int n = 1; n <= N; ++n) {
        int e = path.steps[static_cast<size_t>(n - 1)];
        x[e >> 1] += (e & 1) ? -1 : +1;
        if (n > M) f(pack_site(x.data(), path.d), x);
    }
}

Path sample_path(const WalkConfig& cfg, int N, RngStream& rng);

// log P_h[path] = sum of step log-probabilities
double path_log_weight(const StepLaw& law, const Path& path);

struct HitEstimate {
    double freq = 0.0;        // observed hit frequency within the horizon
    double stderr_ = 0.0;     // binomial standard error
    int horizon = 0;          // certified horizon N*
    double residual = 0.0;    // bound on P[hit in (N*, infinity)]
    long long n_walks = 0;
};

// Monte Carlo check of the -L hitting probability on the projected walk.
// Horizon is chosen so the Chernoff residual e^{-theta L} rho^{N*+1}/(1-rho)
// drops below residual_target (theta optimized by golden section).
HitEstimate mc_hit_frequency(const WalkConfig& cfg, int L, long long n_walks,
                             RngStream rng, double residual_target = 1e-5);

// exact absorbing-chain probability of hitting -L within the same certified
// horizon (dynamic programming on the projected walk) + residual bound
HitEstimate dp_hit_probability(const WalkConfig& cfg, int L,
                               double residual_target = 1e-10);

} // namespace rwrp
