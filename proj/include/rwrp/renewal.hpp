#pragma once
#include <vector>

#include "rwrp/hyperplane.hpp"
#include "rwrp/potential.hpp"
#include "rwrp/walk.hpp"

namespace rwrp {

enum class MassMethod { SlopeFit, InfRatio };

struct MassEstimate {
    double m_hat = 0.0;
    MassMethod method = MassMethod::SlopeFit;
    int L_lo = 1, L_hi = 1;
    double stderr_ = 0.0;          // regression scatter of the fit
    double slack_halfwidth = 0.0;  // certified-tail contribution, through logs
};

// series[i] = X(L_lo + i) > 0; decay mass of X estimated from -log X vs L,
// either by least squares or by the subadditive inf-ratio min -log X(L)/L
MassEstimate estimate_mass(const std::vector<double>& series, int L_lo,
                           MassMethod method);
MassEstimate estimate_mass(const std::vector<double>& series,
                           const std::vector<double>& tails, int L_lo,
                           MassMethod method);

// Certified enclosure from the two-sided submultiplicativity sandwich
//   c X(L1) X(L2) <= X(L1+L2) <= X(L1) X(L2)  (log_c = log c <= 0):
//   upper = min_L -log(X(L))/L        (valid since the values are truncated)
//   lower = max_L (log c - log(X(L)+tail))/L
struct MassBounds {
    double lower = 0.0, upper = 0.0;
};
MassBounds mass_bounds(const std::vector<double>& series,
                       const std::vector<double>& tails, int L_lo, double log_c);

// pi(k) = Lambda^p(k) e^{m k} with the slope-fit bridge mass; the epsilon
// tail sums sum_{j >= T+2} j pi(j), geometrically extrapolated beyond K
struct PiSequence {
    std::vector<double> pi;    // pi[k-1], k = 1..K
    double m_hat = 0.0;
    double sum = 0.0;          // sum_k pi(k)
    double mean = 0.0;         // sum_k k pi(k)
    std::vector<double> eps;   // eps[T], T = 0..K-2
    double tail_ratio = 0.0;
    bool eps_extrapolated = false;
    std::string engine;
};
PiSequence pi_sequence(const WalkConfig& cfg, const PotentialSpec& spec,
                       double beta, int p, int K, double tol, double budget);

// | B^p(L) - sum_{k=1}^L Lambda^p(k) B^p(L-k) |  with B^p(0) = 1
struct RenewalResidual {
    double residual = 0.0;
    double slack = 0.0;  // certified bound on the truncation contribution
    std::vector<double> bridge;       // B^p(1..L)
    std::vector<double> irreducible;  // Lambda^p(1..L)
};
RenewalResidual renewal_residual(const WalkConfig& cfg, const PotentialSpec& spec,
                                 double beta, int p, int L, double budget);

struct MassGapRow {
    int L = 0;
    double Bbar = 0.0, Lambdabar = 0.0;
    double slack_B = 0.0, slack_Lambda = 0.0;
};

struct MassGap {
    MassEstimate mB, mLambda;
    double gap = 0.0;    // mLambda - mB
    double ci95 = 0.0;   // fit scatter + certified slacks
    bool pointwise_ok = true;   // Lambda^p <= B^p on the window
    bool envelope_ok = true;    // Lambda^p(L) <= (1/p) e^{2(phi+lambda)} e^{-m L}
    bool sandwich_ok = true;    // alpha e^{-mU L} <= G(L) <= alpha^{-2} e^{-mLo L}
    bool sandwich_checked = false;
    std::vector<MassGapRow> rows;
};
MassGap mass_gap(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
                 int p, int L_lo, int L_hi, double budget);

// h_bar solves m(h_bar, beta) + h_bar = h; in the ballistic phase the
// fixed-step mass satisfies m_G(h, beta) = lambda_h - lambda_{h_bar}
struct HBarSolution {
    double h_bar = 0.0;
    double mass_at_h = 0.0;   // measured point-to-plane mass at the given drift
    double gap_pred = 0.0;    // lambda_h - lambda_{h_bar}
    int iters = 0;
};
HBarSolution solve_h_bar(const WalkConfig& cfg, const PotentialSpec& spec,
                         double beta, double tol_h, double budget);

// bracket of the critical disorder: m(0, beta_c) = h_target, with
//   beta_lo certified by a truncated upper bound on the zero-drift mass,
//   beta_hi certified by the phi_beta(1) lower bound on it
struct BetaCBracket {
    double beta_lo = 0.0, beta_hi = 0.0;
    double beta_c_heuristic = 0.0;   // slope-fit bisection
    double beta_c_richardson = 0.0;  // small-drift extrapolated cross-check
    double disagreement = 0.0;
    int Lmax = 0;
};
BetaCBracket solve_beta_c(const WalkConfig& cfg, const PotentialSpec& spec,
                          double h_target, double budget);

// K = (sum_{n>=0} P_h[S1(n)=0]/B(n))^2 truncated at N_max, with a geometric
// certificate from the fixed-step mass; throws if the certificate fails
struct KConstant {
    double value = 0.0;   // truncated sum, squared
    double upper = 0.0;   // (sum + tail)^2
    double tail = 0.0;
    std::vector<double> terms;
};
KConstant k_constant(const WalkConfig& cfg, const PotentialSpec& spec,
                     double beta, int N_max, double budget);

} // namespace rwrp
