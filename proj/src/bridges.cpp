#include "rwrp/bridges.hpp"

#include <algorithm>
#include <stdexcept>

namespace rwrp {

bool is_bridge(const std::vector<int>& heights) {
    if (heights.empty()) throw std::invalid_argument("is_bridge: empty height vector");
    int s0 = heights.front(), sN = heights.back();
    for (size_t n = 1; n < heights.size(); ++n)
        if (heights[n] <= s0 || heights[n] > sN) return false;
    return true;
}

int bridge_span(const std::vector<int>& heights) {
    return is_bridge(heights) ? heights.back() - heights.front() : -1;
}

uint64_t covered_levels(const std::vector<int>& heights) {
    int s0 = heights.front();
    uint64_t mask = 0;
    int run_max = 0;
    for (size_t t = 1; t < heights.size(); ++t) {
        int s = heights[t] - s0;
        if (s >= run_max) {
            run_max = s;
            continue;
        }
        // levels R with s <= R < run_max are now covered
        if (run_max - 1 > 62) throw std::overflow_error("covered_levels: span too large");
        for (int r = std::max(s, 1); r <= run_max - 1; ++r) mask |= (1ULL << (r - 1));
    }
    return mask;
}

std::vector<Backtrack> backtracks(const std::vector<int>& heights) {
    int N = static_cast<int>(heights.size()) - 1;
    std::vector<Backtrack> out;
    if (N <= 0) return out;
    // prefix max (strictly before), suffix min (strictly after)
    std::vector<int> pmax(static_cast<size_t>(N) + 1), smin(static_cast<size_t>(N) + 1);
    pmax[0] = heights[0];
    for (int t = 1; t <= N; ++t) pmax[static_cast<size_t>(t)] =
        std::max(pmax[static_cast<size_t>(t - 1)], heights[static_cast<size_t>(t)]);
    smin[static_cast<size_t>(N)] = heights[static_cast<size_t>(N)];
    for (int t = N - 1; t >= 0; --t) smin[static_cast<size_t>(t)] =
        std::min(smin[static_cast<size_t>(t + 1)], heights[static_cast<size_t>(t)]);
    for (int m = 0; m < N; ++m) {
        if (pmax[static_cast<size_t>(m)] != heights[static_cast<size_t>(m)]) continue; // (i)
        int lo = heights[static_cast<size_t>(m)];
        for (int n = m + 1; n <= N; ++n) {
            int sn = heights[static_cast<size_t>(n)];
            if (sn >= heights[static_cast<size_t>(m)]) break;       // leaves [S(n), S(m)) upward
            lo = std::min(lo, sn);
            if (sn != lo) continue;                                  // n must attain the running low
            // (iii): strictly above S(n) afterwards
            bool ok = (n == N) || (smin[static_cast<size_t>(n + 1)] > sn);
            if (!ok) continue;
            Backtrack b;
            b.m = m;
            b.n = n;
            b.span = heights[static_cast<size_t>(m)] - sn;
            int s0 = heights[0];
            for (int r = std::max(sn - s0, 1); r <= heights[static_cast<size_t>(m)] - s0 - 1; ++r)
                if (r <= 62) b.covered |= (1ULL << (r - 1));
            out.push_back(b);
        }
    }
    return out;
}

namespace {

void check_tuple(const std::vector<std::vector<int>>& tuple) {
    if (tuple.empty()) throw std::invalid_argument("bridge tuple: empty");
    int span0 = bridge_span(tuple.front());
    if (span0 < 0) throw std::invalid_argument("bridge tuple: component 0 not a bridge");
    for (size_t j = 1; j < tuple.size(); ++j) {
        int s = bridge_span(tuple[j]);
        if (s < 0)
            throw std::invalid_argument("bridge tuple: component not a bridge");
        if (s != span0)
            throw std::invalid_argument("bridge tuple: spans (end hyperplanes) differ");
    }
}

std::vector<std::vector<int>> heights_of(const std::vector<Path>& tuple) {
    std::vector<std::vector<int>> hs;
    hs.reserve(tuple.size());
    for (const Path& p : tuple) hs.push_back(proj_heights(p));
    return hs;
}

} // namespace

std::vector<int> breaking_points(const std::vector<std::vector<int>>& tuple) {
    check_tuple(tuple);
    int L = tuple.front().back() - tuple.front().front();
    std::vector<int> out;
    if (L == 0) {
        out.push_back(0);
        return out;
    }
    uint64_t covered_any = 0;
    for (const auto& h : tuple) covered_any |= covered_levels(h);
    for (int r = 1; r <= L - 1; ++r)
        if (!(covered_any & (1ULL << (r - 1)))) out.push_back(r);
    out.push_back(L);
    return out;
}

std::vector<int> breaking_points(const std::vector<Path>& tuple) {
    return breaking_points(heights_of(tuple));
}

bool is_irreducible(const std::vector<std::vector<int>>& tuple) {
    std::vector<int> bp = breaking_points(tuple);
    int L = tuple.front().back() - tuple.front().front();
    return L >= 1 && bp.size() == 1;
}

bool is_irreducible(const std::vector<Path>& tuple) {
    return is_irreducible(heights_of(tuple));
}

std::vector<IrreduciblePiece> irreducible_decomposition(
    const std::vector<std::vector<int>>& tuple) {
    std::vector<int> bp = breaking_points(tuple);
    size_t p = tuple.size();
    std::vector<IrreduciblePiece> pieces;
    std::vector<int> prev_t(p, 0);
    int prev_r = 0;
    for (int r : bp) {
        if (r == 0) continue; // span-0 tuple: no pieces
        IrreduciblePiece piece;
        piece.span = r - prev_r;
        piece.t_begin = prev_t;
        piece.t_end.resize(p);
        for (size_t j = 0; j < p; ++j) {
            const auto& h = tuple[j];
            int s0 = h.front();
            // split time at level r: the last time with height <= s0 + r
            int t_split = 0;
            for (int t = 0; t < static_cast<int>(h.size()); ++t)
                if (h[static_cast<size_t>(t)] - s0 <= r) t_split = t;
            piece.t_end[static_cast<size_t>(j)] = t_split;
        }
        pieces.push_back(piece);
        prev_t = pieces.back().t_end;
        prev_r = r;
    }
    return pieces;
}

std::vector<IrreduciblePiece> irreducible_decomposition(const std::vector<Path>& tuple) {
    return irreducible_decomposition(heights_of(tuple));
}

} // namespace rwrp
