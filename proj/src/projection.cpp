#include "rwrp/projection.hpp"

#include <cmath>
#include <stdexcept>

namespace rwrp {

std::vector<double> proj_occupation(const StepLaw& law, int n) {
    if (n < 0) throw std::invalid_argument("proj_occupation: n >= 0");
    double pu = law.proj_up(), pd = law.proj_down(), ps = law.proj_stay();
    std::vector<double> occ(static_cast<size_t>(2 * n + 1), 0.0);
    occ[static_cast<size_t>(n)] = 1.0; // position 0 at index n
    std::vector<double> nxt(occ.size());
    for (int m = 0; m < n; ++m) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int i = n - m; i <= n + m; ++i) {
            double w = occ[static_cast<size_t>(i)];
            if (w == 0.0) continue;
            nxt[static_cast<size_t>(i + 1)] += w * pu;
            nxt[static_cast<size_t>(i - 1)] += w * pd;
            nxt[static_cast<size_t>(i)] += w * ps;
        }
        occ.swap(nxt);
    }
    return occ;
}

TruncatedSum green_sum(const WalkConfig& cfg, int M) {
    if (!(cfg.h > 0.0)) throw std::invalid_argument("green_sum: needs h > 0");
    StepLaw law = step_law(cfg);
    double pu = law.proj_up(), pd = law.proj_down(), ps = law.proj_stay();
    // rolling occupation on [-M, M]
    std::vector<double> occ(static_cast<size_t>(2 * M + 1), 0.0),
        nxt(static_cast<size_t>(2 * M + 1), 0.0);
    occ[static_cast<size_t>(M)] = 1.0;
    TruncatedSum out;
    out.n_max = M;
    out.value = 1.0; // m = 0 term
    for (int m = 1; m <= M; ++m) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int i = M - m + 1; i <= M + m - 1; ++i) {
            double w = occ[static_cast<size_t>(i)];
            if (w == 0.0) continue;
            nxt[static_cast<size_t>(i + 1)] += w * pu;
            nxt[static_cast<size_t>(i - 1)] += w * pd;
            nxt[static_cast<size_t>(i)] += w * ps;
        }
        occ.swap(nxt);
        out.value += occ[static_cast<size_t>(M)];
    }
    // P[S1(m) = 0] <= E[e^{-h S1(m)}] = rho*^m
    double rho = chernoff_rho_min(cfg);
    out.tail = std::pow(rho, M + 1.0) / (1.0 - rho);
    return out;
}

void SlabChain::apply(std::vector<double>& v) const {
    std::vector<double> nxt(static_cast<size_t>(L), 0.0);
    for (int s = 1; s <= L; ++s) {
        double w = v[static_cast<size_t>(s - 1)];
        if (w == 0.0) continue;
        if (s + 1 <= L) nxt[static_cast<size_t>(s)] += w * up;
        if (s - 1 >= 1) nxt[static_cast<size_t>(s - 2)] += w * down;
        nxt[static_cast<size_t>(s - 1)] += w * stay;
    }
    v.swap(nxt);
}

std::vector<double> SlabChain::solve_resolvent(const std::vector<double>& b) const {
    // (I - T) x = b with T tridiagonal: sub = down, diag = stay, super = up.
    // Row s of T: x_{s-1} gains from s via down means T[s][s-1]... assemble
    // directly: (I - T)[i][i] = 1 - stay, [i][i+1] = -down (flow from i+1 down
    // to i contributes to next(i) from v(i+1)) -- careful with orientation:
    // we solve for x with x = b + T^T-free form.  T here acts on column
    // vectors by apply(); its matrix has entries A[j][i] meaning mass moving
    // i -> j.  We need x = (I - A)^{-1} b.
    int n = L;
    std::vector<double> sub(static_cast<size_t>(n), 0.0),
        diag(static_cast<size_t>(n), 0.0), sup(static_cast<size_t>(n), 0.0),
        rhs = b;
    for (int i = 0; i < n; ++i) {
        diag[static_cast<size_t>(i)] = 1.0 - stay;
        // A[i][i-1] = up (mass from position i-1 moves up to i)
        if (i - 1 >= 0) sub[static_cast<size_t>(i)] = -up;
        // A[i][i+1] = down
        if (i + 1 < n) sup[static_cast<size_t>(i)] = -down;
    }
    // Thomas algorithm
    for (int i = 1; i < n; ++i) {
        double wq = sub[static_cast<size_t>(i)] / diag[static_cast<size_t>(i - 1)];
        diag[static_cast<size_t>(i)] -= wq * sup[static_cast<size_t>(i - 1)];
        rhs[static_cast<size_t>(i)] -= wq * rhs[static_cast<size_t>(i - 1)];
    }
    std::vector<double> x(static_cast<size_t>(n));
    x[static_cast<size_t>(n - 1)] = rhs[static_cast<size_t>(n - 1)] / diag[static_cast<size_t>(n - 1)];
    for (int i = n - 2; i >= 0; --i)
        x[static_cast<size_t>(i)] = (rhs[static_cast<size_t>(i)] -
                                     sup[static_cast<size_t>(i)] * x[static_cast<size_t>(i + 1)]) /
                                    diag[static_cast<size_t>(i)];
    return x;
}

double slab_tail(const SlabChain& chain, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != chain.L)
        throw std::invalid_argument("slab_tail: size mismatch");
    // 1^T sum_{k>=1} T^k v = 1^T (I-T)^{-1} T v
    std::vector<double> tv = v;
    chain.apply(tv);
    std::vector<double> x = chain.solve_resolvent(tv);
    double s = 0.0;
    for (double xi : x) s += xi;
    return s;
}

double point_to_plane_gamma_closed(const StepLaw& law, double gamma, int L) {
    if (L < 0) throw std::invalid_argument("point_to_plane_gamma_closed: L >= 0");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("point_to_plane_gamma_closed: gamma in (0,1]");
    double pu = law.proj_up(), pd = law.proj_down(), ps = law.proj_stay();
    double a = 1.0 - gamma * ps;
    double disc = a * a - 4.0 * gamma * gamma * pu * pd;
    if (disc <= 0.0)
        throw std::domain_error("point_to_plane_gamma_closed: series diverges (disc <= 0)");
    double sq = std::sqrt(disc);
    double g00 = 1.0 / sq;                      // sum_n gamma^n P[S1(n) = 0]
    if (L == 0) return g00;
    double psi_up = (a - sq) / (2.0 * gamma * pd); // first-passage series one level up
    return g00 * std::pow(psi_up, L);
}

// ---------------------------------------------------------------------------
// span automaton
// ---------------------------------------------------------------------------
namespace {

struct AutomatonLayout {
    int Lmax;
    // id = offset(m) + (s-1) + m * mask  with mask over bits 0..m-2
    std::vector<int> offset;  // per m
    int n_states;

    explicit AutomatonLayout(int Lmax_) : Lmax(Lmax_) {
        offset.resize(static_cast<size_t>(Lmax) + 1, 0);
        int acc = 0;
        for (int m = 1; m <= Lmax; ++m) {
            offset[static_cast<size_t>(m)] = acc;
            acc += m * (1 << (m - 1));
        }
        n_states = acc;
    }
    int id(int s, int m, uint32_t mask) const {
        return offset[static_cast<size_t>(m)] + (s - 1) + m * static_cast<int>(mask);
    }
};

} // namespace

double SpanSeries::bridge(int L) const {
    double b = 0.0;
    for (double x : w[static_cast<size_t>(L)]) b += x;
    return b;
}

double SpanSeries::irreducible(int L) const {
    uint32_t full = (L >= 1) ? ((1u << (L - 1)) - 1u) : 0u;
    return w[static_cast<size_t>(L)][full];
}

double SpanSeries::irreducible2(int L) const {
    uint32_t full = (L >= 1) ? ((1u << (L - 1)) - 1u) : 0u;
    const std::vector<double>& wl = w[static_cast<size_t>(L)];
    double s = 0.0;
    for (uint32_t c1 = 0; c1 <= full; ++c1)
        for (uint32_t c2 = 0; c2 <= full; ++c2)
            if ((c1 | c2) == full) s += wl[c1] * wl[c2];
    return s;
}

SpanSeries span_series(const StepLaw& law, int Lmax, double gamma, int max_steps) {
    if (Lmax < 1 || Lmax > 16)
        throw std::invalid_argument("span_series: Lmax in [1,16]");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("span_series: gamma in (0,1]");
    AutomatonLayout lay(Lmax);
    double pu = gamma * law.proj_up(), pd = gamma * law.proj_down(),
           ps = gamma * law.proj_stay();

    std::vector<double> amp(static_cast<size_t>(lay.n_states), 0.0),
        nxt(static_cast<size_t>(lay.n_states), 0.0),
        tot(static_cast<size_t>(lay.n_states), 0.0);
    amp[static_cast<size_t>(lay.id(1, 1, 0))] = pu; // forced first step +1
    for (double& t : tot) t = 0.0;
    for (size_t i = 0; i < amp.size(); ++i) tot[i] = amp[i];

    auto step_to = [&](int s, int m, uint32_t mask, int ds, double q,
                       std::vector<double>& dst) {
        int s2 = s + ds;
        if (s2 < 1) return;
        int m2 = std::max(m, s2);
        if (m2 > Lmax) return;
        uint32_t mask2 = mask;
        for (int r = std::max(s2, 1); r <= m2 - 1; ++r) mask2 |= (1u << (r - 1));
        dst[static_cast<size_t>(lay.id(s2, m2, mask2))] += q;
    };

    int n = 1;
    for (; n < max_steps; ++n) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        double norm = 0.0;
        for (int m = 1; m <= Lmax; ++m) {
            uint32_t mmax = (m >= 1) ? (1u << (m - 1)) : 1u;
            for (uint32_t mask = 0; mask < mmax; ++mask)
                for (int s = 1; s <= m; ++s) {
                    double a = amp[static_cast<size_t>(lay.id(s, m, mask))];
                    if (a == 0.0) continue;
                    norm += a;
                    step_to(s, m, mask, +1, a * pu, nxt);
                    step_to(s, m, mask, -1, a * pd, nxt);
                    step_to(s, m, mask, 0, a * ps, nxt);
                }
        }
        amp.swap(nxt);
        for (size_t i = 0; i < amp.size(); ++i) tot[i] += amp[i];
        if (norm < 1e-280) break; // amplitudes vanished to denormal range
    }

    // certified remainder via the s-marginal slab chain
    SlabChain slab(law, Lmax, gamma);
    std::vector<double> marg(static_cast<size_t>(Lmax), 0.0);
    for (int m = 1; m <= Lmax; ++m) {
        uint32_t mmax = (m >= 1) ? (1u << (m - 1)) : 1u;
        for (uint32_t mask = 0; mask < mmax; ++mask)
            for (int s = 1; s <= m; ++s)
                marg[static_cast<size_t>(s - 1)] +=
                    amp[static_cast<size_t>(lay.id(s, m, mask))];
    }
    // mass of all steps strictly beyond the horizon, summed over every state
    double rem = slab_tail(slab, marg);

    SpanSeries out;
    out.Lmax = Lmax;
    out.steps = n;
    // rounding allowance: n iterations of fused ops on magnitudes <= 1
    out.tail = rem + 1e-15 * static_cast<double>(n);
    out.w.assign(static_cast<size_t>(Lmax) + 1, {});
    for (int L = 1; L <= Lmax; ++L) {
        uint32_t full = (1u << (L - 1));
        out.w[static_cast<size_t>(L)].assign(full, 0.0);
        for (uint32_t mask = 0; mask < full; ++mask)
            out.w[static_cast<size_t>(L)][mask] = tot[static_cast<size_t>(lay.id(L, L, mask))];
    }
    return out;
}

} // namespace rwrp
