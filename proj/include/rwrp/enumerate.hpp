#pragma once
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwrp/potential.hpp"
#include "rwrp/walk.hpp"

namespace rwrp {

struct BudgetExceeded : std::runtime_error {
    double estimated = 0.0;
    double budget = 0.0;
    BudgetExceeded(double est, double bud)
        : std::runtime_error("enumeration budget exceeded: estimated " +
                             std::to_string(est) + " nodes > budget " +
                             std::to_string(bud)),
          estimated(est), budget(bud) {}
};

// Small open-addressing multiset of packed lattice sites, tuned for DFS use:
// at most O(depth) keys live at any time.  Erase uses backward-shift deletion
// so probe chains never accumulate tombstones.
class FlatCounter {
  public:
    explicit FlatCounter(std::size_t capacity_pow2 = 1024);

    // add one visit; returns the count before the increment
    int increment(uint64_t key);
    // remove one visit; returns the count after the decrement
    int decrement(uint64_t key);
    int at(uint64_t key) const;
    std::size_t distinct() const { return live_; }
    void clear();

  private:
    std::vector<uint64_t> keys_;
    std::vector<int> counts_;
    std::size_t mask_;
    std::size_t live_ = 0;

    std::size_t slot(uint64_t key) const;
    void erase_slot(std::size_t i);
};

// ---------------------------------------------------------------------------
// Exhaustive path sums at fixed step count.  All engines enumerate in
// lexicographic step order (step index 0..2d-1 at every depth), so sums are
// bit-reproducible.  The node estimate (2d)^N is checked against the budget
// up front and a live node counter aborts if the estimate was beaten.
// ---------------------------------------------------------------------------

// visitor(prob_weight, path, local_times over (0, N])
using PathVisitor =
    std::function<void(double, const Path&, const LocalTimeField&)>;

void enumerate_paths(const WalkConfig& cfg, int N, double budget,
                     const PathVisitor& visit);

// G(N) = E_h[exp(-Phi_beta(N))]
double exact_G(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
               int N, double budget);

struct BridgeSpectrum {
    double total = 0.0;
    std::vector<double> by_span;  // index L = 0..N
};

// B(N): restriction of G(N) to bridges, with the span-resolved spectrum
BridgeSpectrum exact_bridge_spectrum(const WalkConfig& cfg,
                                     const PotentialSpec& spec, double beta,
                                     int N, double budget);
double exact_B(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
               int N, double budget);

// restriction of B(N) to irreducible bridges (no covered-free interior level)
BridgeSpectrum exact_irreducible_spectrum(const WalkConfig& cfg,
                                          const PotentialSpec& spec,
                                          double beta, int N, double budget);

// E[exp(-coupled Phi)] over independent pairs of lengths N1, N2, the second
// walk started at perpendicular offset dy (dy[0] must be 0)
double exact_second_moment(const WalkConfig& cfg, const PotentialSpec& spec,
                           double beta, int N1, int N2,
                           const std::array<int, 8>& dy, double budget);

// same restricted to pairs forming a two-walk bridge with common end plane
double exact_pair_coupled_bridge(const WalkConfig& cfg,
                                 const PotentialSpec& spec, double beta,
                                 int N1, int N2, const std::array<int, 8>& dy,
                                 double budget);

// weight of G(N) resolved by the squared local-time norm: profile[s] sums
// P-weight * exp(-Phi) over paths with ||ell||_2^2 = s  (s = N..N^2)
std::vector<double> restricted_profile(const WalkConfig& cfg,
                                       const PotentialSpec& spec, double beta,
                                       int N, double budget);

// G^{<=k}(N): restriction to ||ell||_2^2 <= k N.  k >= N gives G(N); k < 1
// gives 0; k = 1 keeps exactly the self-avoiding paths.
double exact_restricted_G(const WalkConfig& cfg, const PotentialSpec& spec,
                          double beta, int N, double k, double budget);

// number of strictly self-avoiding N-step paths (no site visited twice,
// start included)
long long saw_count(int d, int N, double budget);
// weight sum of paths whose visited sites over (0, N] are pairwise distinct
// (one return to the start is allowed); equals the ||ell||^2 = N slice of
// the restricted profile, computed by an independent pruned engine
double saw_weight_sum(const WalkConfig& cfg, const PotentialSpec& spec,
                      double beta, int N, double budget);

// ---------------------------------------------------------------------------
// Path table: one enumeration pass stores every path's probability weight and
// site/visit list, so many environments (or a second table) can be evaluated
// against it without re-walking the tree.
// ---------------------------------------------------------------------------
struct PathTableEntry {
    double weight = 0.0;  // P_h[path]
    int span = -1;        // bridge span, or -1 if not a bridge
    // (packed site, visit count), sorted by packed key
    std::vector<std::pair<uint64_t, int>> sites;
};

struct PathTable {
    int d = 1;
    int n_steps = 0;
    std::vector<PathTableEntry> entries;
};

PathTable build_path_table(const WalkConfig& cfg, int N, double budget,
                           bool bridges_only = false,
                           const std::array<int, 8>& start_offset = {});

// Z_omega = sum_paths w * exp(-beta * sum_x ell_x V_x)
double quenched_partition(const PathTable& table, const Environment& env,
                          double beta);
// E Z = sum_paths w * exp(-sum_x phi(beta ell_x)); cross-check for exact_G
double annealed_partition(const PathTable& table, const PotentialSpec& spec,
                          double beta);
// E Z^2 via table pairing with the coupled transform (offset already baked
// into the tables' site keys)
double paired_second_moment(const PathTable& t1, const PathTable& t2,
                            const PotentialSpec& spec, double beta);

} // namespace rwrp
