#pragma once
#include <cstdint>
#include <vector>

#include "rwrp/walk.hpp"

namespace rwrp {

// P[S1(n) = s] for s = -n..n (index s + n)
std::vector<double> proj_occupation(const StepLaw& law, int n);

struct TruncatedSum {
    double value = 0.0;
    double tail = 0.0;   // certified bound on the dropped part
    int n_max = 0;
};

// sum_{m=0..M} P_h[S1(m) = 0], tail <= rho*^{M+1}/(1-rho*), rho* = e^{-lambda}
TruncatedSum green_sum(const WalkConfig& cfg, int M);

// Substochastic one-step matrix of the projected walk restricted to {1..L}
// with an optional per-step discount gamma.
struct SlabChain {
    int L = 0;
    double up = 0, down = 0, stay = 0; // already multiplied by gamma

    SlabChain(const StepLaw& law, int L_, double gamma = 1.0)
        : L(L_), up(gamma * law.proj_up()), down(gamma * law.proj_down()),
          stay(gamma * law.proj_stay()) {}

    // v <- T v (v indexed 1..L at 0..L-1)
    void apply(std::vector<double>& v) const;
    // solve (I - T) x = b exactly (tridiagonal elimination)
    std::vector<double> solve_resolvent(const std::vector<double>& b) const;
};

// Exact tail of the span-<=L bridge mass: sum_{n > M} P-weights of slab paths,
// started from marginal occupation vector v (≥0), i.e. 1^T sum_{k>=1} T^k v.
double slab_tail(const SlabChain& chain, const std::vector<double>& v);

// Total series sum_{n>=1} gamma^n P_h[S1(n) = L] in closed form (generating
// function of the lazy walk); L = 0 includes the n = 0 term.
double point_to_plane_gamma_closed(const StepLaw& law, double gamma, int L);

// ---------------------------------------------------------------------------
// Span automaton: finite-state recursion over (position s, running max m,
// covered-level bitmask) for bridge series of span <= Lmax with a constant
// per-step weight factor gamma.  Exact up to a certified geometric remainder.
// ---------------------------------------------------------------------------
struct SpanSeries {
    int Lmax = 0;
    // w[L][mask]: series weight of span-L bridges whose covered-level set is
    // exactly `mask` (bits over interior levels 1..L-1), summed over all step
    // counts.  Bridge series B(L) = sum_mask w[L][mask]; irreducible series
    // Lambda(L) = w[L][full].
    std::vector<std::vector<double>> w;
    double tail = 0.0;     // certified remainder bound (total over all reads)
    int steps = 0;         // iteration horizon used

    double bridge(int L) const;
    double irreducible(int L) const;
    // two-replica irreducible series: masks must jointly cover the interior
    double irreducible2(int L) const;
};

SpanSeries span_series(const StepLaw& law, int Lmax, double gamma, int max_steps = 4000);

} // namespace rwrp
