#pragma once
#include <cstdint>
#include <vector>

#include "rwrp/walk.hpp"

namespace rwrp {

// Bridge: S1(0) < S1(n) <= S1(N) for n = 1..N (empty path = span-0 bridge).
// Span = S1(N) - S1(0).
bool is_bridge(const std::vector<int>& heights);
inline bool is_bridge(const Path& p) { return is_bridge(proj_heights(p)); }

// span if bridge, -1 otherwise
int bridge_span(const std::vector<int>& heights);
inline int bridge_span(const Path& p) { return bridge_span(proj_heights(p)); }

// Interior levels R (relative, 1 <= R <= span-1) "covered" by a descent:
// R is covered iff the walk revisits {<= R} after first exceeding R.
// Returned as a bitmask with bit (R-1) set.  Levels <= 62 supported.
uint64_t covered_levels(const std::vector<int>& heights);
inline uint64_t covered_levels(const Path& p) { return covered_levels(proj_heights(p)); }

// Backtrack of a path per the descent-excursion definition: a pair (m, n),
// m < n, such that (i) S1 never exceeds S1(m) before m, (ii) S1 stays in
// [S1(n), S1(m)) on (m, n], (iii) S1 stays above S1(n) after n.  Its covered
// levels are [S1(n), S1(m)) (relative to the start height).
struct Backtrack {
    int m = 0, n = 0;
    int span = 0;            // S1(m) - S1(n)
    uint64_t covered = 0;    // bitmask of relative levels
};

std::vector<Backtrack> backtracks(const std::vector<int>& heights);
inline std::vector<Backtrack> backtracks(const Path& p) { return backtracks(proj_heights(p)); }

// A p-tuple of bridges with common start and end hyperplanes.
// Breaking points: relative heights R in (0, L] such that every component
// splits at R into a left span-R bridge and a right bridge; R = L always
// qualifies.  Interior R qualifies iff no component covers R.
// Preconditions: every component is a bridge; spans agree.
std::vector<int> breaking_points(const std::vector<std::vector<int>>& heights_tuple);
std::vector<int> breaking_points(const std::vector<Path>& tuple);

bool is_irreducible(const std::vector<std::vector<int>>& heights_tuple);
bool is_irreducible(const std::vector<Path>& tuple);
inline bool is_irreducible(const Path& p) {
    return is_irreducible(std::vector<std::vector<int>>{proj_heights(p)});
}

// One irreducible piece of the decomposition: spans plus, per component,
// the closed time window (t_begin, t_end] it occupies.
struct IrreduciblePiece {
    int span = 0;
    std::vector<int> t_begin;  // per component: split time of the left cut
    std::vector<int> t_end;    // per component: split time of the right cut
};

// Split the tuple at all its breaking points (Prop-style unique decomposition).
// A component's right piece may be empty only at the final cut.
std::vector<IrreduciblePiece> irreducible_decomposition(
    const std::vector<std::vector<int>>& heights_tuple);
std::vector<IrreduciblePiece> irreducible_decomposition(const std::vector<Path>& tuple);

} // namespace rwrp
