#pragma once
#include <stdexcept>
#include <string>

#include "rwrp/potential.hpp"
#include "rwrp/projection.hpp"
#include "rwrp/walk.hpp"

namespace rwrp {

// Point-to-hyperplane series at distance L: sums over all step counts of the
// annealed path weight, restricted to the event of the chosen kind.
enum class PlaneKind {
    EndpointG,          // endpoint on the plane
    BridgeB,            // span-L bridge
    IrreducibleLambda,  // irreducible span-L bridge
    BridgeB2,           // two-replica bridge pair (uncoupled weights)
    IrreducibleLambda2, // two-replica jointly irreducible pair
};

struct ToleranceUnreachable : std::runtime_error {
    double best_tail = 0.0;
    ToleranceUnreachable(const std::string& what, double best)
        : std::runtime_error(what), best_tail(best) {}
};

struct PlaneSum {
    double value = 0.0;
    double certified_tail = 0.0;  // bound on the dropped mass (heuristic => estimate)
    int n_max = 0;                // step-count horizon actually summed
    double theta = 0.0;           // Chernoff tilt of the certificate, 0 if resolvent
    bool heuristic = false;       // zero-drift stopping rule, tail not certified
    std::string engine;           // "automaton" | "dp" | "dfs" | "dfs-heuristic"
};

// Potentials whose annealed weight is a pure function of the step count:
// beta = 0, or a point mass (phi linear).  These admit exact projected-chain
// engines with per-step discount gamma = e^{-phi_beta(1)}.
bool projection_measurable(const PotentialSpec& spec, double beta);
double per_step_gamma(const PotentialSpec& spec, double beta);

PlaneSum truncated_point_to_plane(const WalkConfig& cfg, const PotentialSpec& spec,
                                  double beta, int L, PlaneKind kind, double tol,
                                  double budget);

// Whole bridge/irreducible series for spans 1..Lmax in one pass (the renewal
// module's workhorse).  Engine choice as above; `tail` is a certified global
// remainder except in the flagged zero-drift heuristic mode.
struct BridgeSeries {
    SpanSeries series;
    bool heuristic = false;
    std::string engine;
    double phi1 = 0.0;  // phi_beta(1), the per-site envelope rate
};

BridgeSeries bridge_span_series(const WalkConfig& cfg, const PotentialSpec& spec,
                                double beta, int Lmax, double tol, double budget);

} // namespace rwrp
