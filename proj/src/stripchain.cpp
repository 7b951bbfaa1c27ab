#include "rwrp/stripchain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "rwrp/bridges.hpp"
#include "rwrp/enumerate.hpp"

namespace rwrp {

namespace {

int l1_perp(const std::array<int, 8>& v, int d) {
    int s = 0;
    for (int i = 1; i < d; ++i) s += std::abs(v[i]);
    return s;
}

bool is_zero_perp(const std::array<int, 8>& v, int d) {
    for (int i = 1; i < d; ++i)
        if (v[i] != 0) return false;
    return true;
}

// ---------------------------------------------------------------------------
// enumerated engine: harvest single-walk bridge legs once, pair them per
// offset class
// ---------------------------------------------------------------------------

struct Leg {
    int n = 0;
    int span = 0;
    uint64_t mask = 0;
    double w = 0.0;  // P_h[path] * exp(-Phi_beta)
    std::array<int, 8> disp{};
    std::vector<std::pair<std::array<int, 8>, int>> sites;  // coords, count
    std::vector<std::pair<uint64_t, int>> keyed;            // packed, sorted
};

struct Harvest {
    int d = 1;
    int cutoff = 0;
    double m_hat = 0.0;
    std::vector<Leg> legs;
    std::vector<std::vector<int>> by_span;  // leg indices per span
};

Harvest harvest_legs(const WalkConfig& cfg, const PotentialSpec& spec,
                     double beta, int cutoff) {
    if (cfg.h <= 0.0)
        throw std::invalid_argument("strip table needs forward drift h > 0");
    if (cutoff < 2 || cutoff > 20)
        throw std::invalid_argument("strip table cutoff out of range [2, 20]");
    double est = 0.0, pow = 1.0;
    for (int n = 1; n <= cutoff - 1; ++n) {
        pow *= 2.0 * cfg.d;
        est += pow;
    }
    if (est > 6e7) throw BudgetExceeded(est, 6e7);

    Harvest h;
    h.d = cfg.d;
    h.cutoff = cutoff;
    h.m_hat = n_step_mass(cfg, spec, beta);
    h.by_span.assign(static_cast<size_t>(cutoff), {});
    for (int n = 1; n <= cutoff - 1; ++n) {
        enumerate_paths(cfg, n, 1e9,
                        [&](double prob, const Path& path, const LocalTimeField&) {
            if (!is_bridge(path)) return;
            Leg leg;
            leg.n = n;
            leg.span = bridge_span(path);
            if (leg.span >= cutoff) return;  // pair partner would not fit
            leg.mask = covered_levels(path);
            leg.w = prob * std::exp(-annealed_energy(path, spec, beta));
            std::array<int, 8> pos{};
            std::vector<std::pair<uint64_t, std::array<int, 8>>> visits;
            for (int t = 0; t < n; ++t) {
                int e = path.steps[static_cast<size_t>(t)];
                pos[e >> 1] += (e & 1) ? -1 : +1;
                visits.emplace_back(pack_site(pos.data(), cfg.d), pos);
            }
            leg.disp = pos;
            std::sort(visits.begin(), visits.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (size_t i = 0; i < visits.size();) {
                size_t j = i;
                while (j < visits.size() && visits[j].first == visits[i].first) ++j;
                leg.keyed.emplace_back(visits[i].first, static_cast<int>(j - i));
                leg.sites.emplace_back(visits[i].second, static_cast<int>(j - i));
                i = j;
            }
            h.by_span[static_cast<size_t>(leg.span)].push_back(
                static_cast<int>(h.legs.size()));
            h.legs.push_back(std::move(leg));
        });
    }
    // pair-loop cost guard
    double pairs = 0.0;
    for (size_t s = 1; s < h.by_span.size(); ++s) {
        double c = static_cast<double>(h.by_span[s].size());
        pairs += c * c;
    }
    if (pairs > 5e8) throw BudgetExceeded(pairs, 5e8);
    return h;
}

// sum over shared sites of both visit counts, second leg shifted by dy
int shared_overlap(const Leg& a, const Leg& b, const std::array<int, 8>& dy,
                   int d) {
    int z = 0;
    for (const auto& sc : b.sites) {
        std::array<int, 8> q = sc.first;
        for (int i = 1; i < d; ++i) q[i] += dy[i];
        uint64_t key = pack_site(q.data(), d);
        auto it = std::lower_bound(
            a.keyed.begin(), a.keyed.end(), key,
            [](const std::pair<uint64_t, int>& p, uint64_t k) { return p.first < k; });
        if (it != a.keyed.end() && it->first == key) z += it->second + sc.second;
    }
    return z;
}

StripTable table_from_harvest(const Harvest& h, const std::array<int, 8>& dy) {
    const int d = h.d;
    StripTable table;
    table.offset = dy;
    table.cutoff = h.cutoff;
    table.m_hat = h.m_hat;
    table.far_class = l1_perp(dy, d) > h.cutoff;

    // key: (n1, n2, zeta, packed offset increment) -> aggregated mass
    std::map<std::tuple<int, int, int, uint64_t>,
             std::pair<double, std::array<int, 8>>> agg;
    for (size_t s = 1; s < h.by_span.size(); ++s) {
        uint64_t full = s >= 2 ? (uint64_t{1} << (s - 1)) - 1 : 0;
        for (int i1 : h.by_span[s]) {
            const Leg& a = h.legs[static_cast<size_t>(i1)];
            for (int i2 : h.by_span[s]) {
                const Leg& b = h.legs[static_cast<size_t>(i2)];
                if (a.n + b.n > h.cutoff) continue;
                if ((a.mask | b.mask) != full) continue;
                int zeta = 0;
                if (!table.far_class && l1_perp(dy, d) <= a.n + b.n)
                    zeta = shared_overlap(a, b, dy, d);
                std::array<int, 8> doff{};
                for (int i = 1; i < d; ++i) doff[i] = b.disp[i] - a.disp[i];
                double p = a.w * b.w *
                           std::exp(h.m_hat * static_cast<double>(a.n + b.n));
                auto key = std::make_tuple(a.n, b.n, zeta,
                                           pack_site(doff.data(), d));
                auto [it, fresh] = agg.try_emplace(key, 0.0, doff);
                (void)fresh;
                it->second.first += p;
            }
        }
    }
    for (const auto& [key, val] : agg) {
        StripEntry e;
        e.n1 = std::get<0>(key);
        e.n2 = std::get<1>(key);
        e.zeta = std::get<2>(key);
        e.d_off = val.second;
        e.p = val.first;
        table.entries.push_back(e);
    }
    double run = 0.0;
    for (const auto& e : table.entries) {
        run += e.p;
        table.cum.push_back(run);
    }
    table.captured = run;
    return table;
}

// ---------------------------------------------------------------------------
// sampled engine: transfer-matrix class probabilities over
// (running max, height, cover mask), exact leg realization by backward
// sampling.  Valid when the tilted per-step weight is the plain walk law,
// i.e. beta = 0 or PointMass disorder (Phi = beta v N, m_hat = beta v).
// ---------------------------------------------------------------------------

struct DpEngine {
    int d = 1;
    int span_max = 1;
    int cutoff = 2;
    double p_up = 0.0, p_dn = 0.0, p_st = 0.0;
    int n_perp = 0;

    std::vector<int> base;             // state-id base per running max
    int n_states = 0;
    std::vector<std::vector<double>> f;  // f[t][state], t = 1..cutoff-1

    struct Edge {
        int prev;
        double p;
    };
    std::vector<std::vector<Edge>> rev;  // predecessors per state

    // A[s] : per-(n, mask) end-state mass; SS[s] : superset sums over masks
    std::vector<std::vector<std::vector<double>>> A, SS;

    struct ClassNT {
        int s, n1, n2;
    };
    std::vector<ClassNT> classes;
    std::vector<double> class_cum;
    double captured = 0.0;

    int sid(int m, int h, uint64_t mask) const {
        return base[static_cast<size_t>(m)] +
               (h - 1) * (1 << (m - 1)) + static_cast<int>(mask);
    }

    DpEngine(const WalkConfig& cfg, int smax, int cut) {
        d = cfg.d;
        span_max = smax;
        cutoff = cut;
        StepLaw law = step_law(cfg);
        p_up = law.p_plus;
        p_dn = law.p_minus;
        n_perp = 2 * d - 2;
        p_st = n_perp * law.p_perp;

        base.assign(static_cast<size_t>(span_max + 1), 0);
        for (int m = 1; m <= span_max; ++m) {
            base[static_cast<size_t>(m)] = n_states;
            n_states += m * (1 << (m - 1));
        }
        rev.assign(static_cast<size_t>(n_states), {});
        auto cover = [](int lo, int hi) -> uint64_t {  // levels lo..hi
            if (lo > hi) return 0;
            return ((uint64_t{1} << hi) - 1) ^ ((uint64_t{1} << (lo - 1)) - 1);
        };
        for (int m = 1; m <= span_max; ++m)
            for (int h = 1; h <= m; ++h)
                for (uint64_t mask = 0; mask < (uint64_t{1} << (m - 1)); ++mask) {
                    int from = sid(m, h, mask);
                    if (h + 1 <= span_max) {
                        int to = h + 1 > m
                                     ? sid(h + 1, h + 1, mask)
                                     : sid(m, h + 1, mask | cover(h + 1, m - 1));
                        rev[static_cast<size_t>(to)].push_back({from, p_up});
                    }
                    if (h - 1 >= 1) {
                        int to = sid(m, h - 1, mask | cover(h - 1, m - 1));
                        rev[static_cast<size_t>(to)].push_back({from, p_dn});
                    }
                    if (p_st > 0.0) {
                        int to = sid(m, h, mask | cover(h, m - 1));
                        rev[static_cast<size_t>(to)].push_back({from, p_st});
                    }
                }

        const int n_max = cutoff - 1;
        f.assign(static_cast<size_t>(n_max + 1),
                 std::vector<double>(static_cast<size_t>(n_states), 0.0));
        f[1][static_cast<size_t>(sid(1, 1, 0))] = p_up;
        for (int t = 2; t <= n_max; ++t)
            for (int st = 0; st < n_states; ++st) {
                double acc = 0.0;
                for (const Edge& e : rev[static_cast<size_t>(st)])
                    acc += f[static_cast<size_t>(t - 1)]
                            [static_cast<size_t>(e.prev)] * e.p;
                f[static_cast<size_t>(t)][static_cast<size_t>(st)] = acc;
            }

        A.assign(static_cast<size_t>(span_max + 1), {});
        SS = A;
        for (int s = 1; s <= span_max; ++s) {
            int n_masks = 1 << (s - 1);
            A[static_cast<size_t>(s)].assign(
                static_cast<size_t>(n_max + 1),
                std::vector<double>(static_cast<size_t>(n_masks), 0.0));
            SS[static_cast<size_t>(s)] = A[static_cast<size_t>(s)];
            for (int n = 1; n <= n_max; ++n) {
                for (int mask = 0; mask < n_masks; ++mask)
                    A[static_cast<size_t>(s)][static_cast<size_t>(n)]
                     [static_cast<size_t>(mask)] =
                        f[static_cast<size_t>(n)]
                         [static_cast<size_t>(sid(s, s, static_cast<uint64_t>(mask)))];
                auto& ss = SS[static_cast<size_t>(s)][static_cast<size_t>(n)];
                ss = A[static_cast<size_t>(s)][static_cast<size_t>(n)];
                for (int bit = 0; bit < s - 1; ++bit)
                    for (int mask = 0; mask < n_masks; ++mask)
                        if (!(mask & (1 << bit)))
                            ss[static_cast<size_t>(mask)] +=
                                ss[static_cast<size_t>(mask | (1 << bit))];
            }
        }

        double run = 0.0;
        for (int s = 1; s <= span_max; ++s) {
            int n_masks = 1 << (s - 1);
            int full = n_masks - 1;
            for (int n1 = 1; n1 <= n_max; ++n1)
                for (int n2 = 1; n2 + n1 <= cutoff; ++n2) {
                    double w = 0.0;
                    for (int m1 = 0; m1 < n_masks; ++m1) {
                        double a = A[static_cast<size_t>(s)]
                                    [static_cast<size_t>(n1)]
                                    [static_cast<size_t>(m1)];
                        if (a > 0.0)
                            w += a * SS[static_cast<size_t>(s)]
                                      [static_cast<size_t>(n2)]
                                      [static_cast<size_t>(full & ~m1)];
                    }
                    if (w > 0.0) {
                        run += w;
                        classes.push_back({s, n1, n2});
                        class_cum.push_back(run);
                    }
                }
        }
        captured = run;
    }

    // backward-sample one leg with end class (s, n, mask); returns the height
    // profile as step types: 0 up, 1 down, 2 stay
    void sample_leg(int s, int n, int mask, RngStream& rng,
                    std::vector<int>* steps) const {
        steps->assign(static_cast<size_t>(n), 0);
        int cur = sid(s, s, static_cast<uint64_t>(mask));
        for (int t = n; t >= 2; --t) {
            double tot = 0.0;
            for (const Edge& e : rev[static_cast<size_t>(cur)])
                tot += f[static_cast<size_t>(t - 1)]
                        [static_cast<size_t>(e.prev)] * e.p;
            double u = rng.next_double() * tot;
            const Edge* pick = &rev[static_cast<size_t>(cur)].back();
            for (const Edge& e : rev[static_cast<size_t>(cur)]) {
                double w = f[static_cast<size_t>(t - 1)]
                            [static_cast<size_t>(e.prev)] * e.p;
                u -= w;
                if (u < 0.0) {
                    pick = &e;
                    break;
                }
            }
            // recover the step type from the height change; probabilities are
            // ambiguous when p_up == p_dn
            int pm = 0, ph = 0;
            decode(pick->prev, &pm, &ph);
            int cm = 0, ch = 0;
            decode(cur, &cm, &ch);
            int type = ch > ph ? 0 : (ch < ph ? 1 : 2);
            (*steps)[static_cast<size_t>(t - 1)] = type;
            cur = pick->prev;
        }
        (*steps)[0] = 0;  // first step always climbs
    }

    void decode(int id, int* m, int* h) const {
        int mm = 1;
        while (mm + 1 <= span_max && base[static_cast<size_t>(mm + 1)] <= id)
            ++mm;
        int rest = id - base[static_cast<size_t>(mm)];
        *m = mm;
        *h = rest / (1 << (mm - 1)) + 1;
    }
};

// realize a sampled height profile as lattice sites: stays pick a uniform
// transverse direction; per-site visit counts (steps 1..n) are collected only
// when the caller needs the overlap
void realize_leg(const std::vector<int>& types, int d,
                 const std::array<int, 8>& start, RngStream& rng,
                 bool want_sites,
                 std::vector<std::pair<uint64_t, int>>* keyed,
                 std::array<int, 8>* disp) {
    std::array<int, 8> pos = start;
    int n_perp = 2 * d - 2;
    keyed->clear();
    for (int ty : types) {
        if (ty == 0) {
            ++pos[0];
        } else if (ty == 1) {
            --pos[0];
        } else {
            int idx = static_cast<int>(rng.next_double() * n_perp);
            if (idx >= n_perp) idx = n_perp - 1;
            int axis = 1 + idx / 2;
            pos[static_cast<size_t>(axis)] += (idx & 1) ? -1 : +1;
        }
        if (want_sites) keyed->emplace_back(pack_site(pos.data(), d), 1);
    }
    if (want_sites) {
        std::sort(keyed->begin(), keyed->end());
        size_t out = 0;
        for (size_t i = 0; i < keyed->size();) {
            size_t j = i;
            while (j < keyed->size() && (*keyed)[j].first == (*keyed)[i].first)
                ++j;
            (*keyed)[out++] = {(*keyed)[i].first, static_cast<int>(j - i)};
            i = j;
        }
        keyed->resize(out);
    }
    for (int i = 0; i < d; ++i)
        (*disp)[static_cast<size_t>(i)] =
            pos[static_cast<size_t>(i)] - start[static_cast<size_t>(i)];
}

bool exact_tilt(const PotentialSpec& spec, double beta) {
    return beta == 0.0 || spec.kind == PotentialKind::PointMass;
}

// Tilted mass of irreducible same-span bridge pairs outside a capture region,
// under the pure walk law: sum of p(pair) e^{tilt (n1+n2)} over irreducible
// pairs not among the captured classes, whose tilted mass the caller passes
// in.  Runs the cover-mask DP forward with rolling state vectors (spans to
// span_ext, leg durations to t_cap), joins the two legs' cover masks by
// superset sums to get the tilted irreducible pair mass per span over all
// durations, then adds a geometric remainder for legs longer than t_cap and
// for spans beyond span_ext, and subtracts the captured part.  Everything is
// a sum of positive terms except that final subtraction, so the difference
// keeps absolute accuracy near machine epsilon.  Returns +inf when a
// remainder ratio fails to contract or the region is too wide to extend.
double uncaptured_tilted_mass(const WalkConfig& cfg, double tilt, int smax,
                              int t_cap, double captured_tilted) {
    const double inf = std::numeric_limits<double>::infinity();
    const int span_ext = smax + 2;
    if (span_ext > 16 || span_ext < 3) return inf;
    StepLaw law = step_law(cfg);
    const double g = std::exp(tilt);
    const double p_up = law.p_plus * g, p_dn = law.p_minus * g;
    const double p_st = (2 * cfg.d - 2) * law.p_perp * g;

    std::vector<int> base(static_cast<size_t>(span_ext + 1), 0);
    int n_states = 0;
    for (int m = 1; m <= span_ext; ++m) {
        base[static_cast<size_t>(m)] = n_states;
        n_states += m * (1 << (m - 1));
    }
    auto sid = [&](int m, int h, uint64_t mask) {
        return base[static_cast<size_t>(m)] + (h - 1) * (1 << (m - 1)) +
               static_cast<int>(mask);
    };
    auto cover = [](int lo, int hi) -> uint64_t {  // levels lo..hi
        if (lo > hi) return 0;
        return ((uint64_t{1} << hi) - 1) ^ ((uint64_t{1} << (lo - 1)) - 1);
    };

    std::vector<double> cur(static_cast<size_t>(n_states), 0.0), nxt = cur;
    std::vector<std::vector<double>> acc(static_cast<size_t>(span_ext + 1));
    for (int s = 1; s <= span_ext; ++s)
        acc[static_cast<size_t>(s)].assign(size_t{1} << (s - 1), 0.0);
    std::vector<double> leg_tot(static_cast<size_t>(span_ext + 1), 0.0),
        leg_now(static_cast<size_t>(span_ext + 1), 0.0),
        leg_prev(static_cast<size_t>(span_ext + 1), 0.0);

    cur[static_cast<size_t>(sid(1, 1, 0))] = p_up;
    for (int n = 1; n <= t_cap; ++n) {
        if (n > 1) {
            std::fill(nxt.begin(), nxt.end(), 0.0);
            for (int m = 1; m <= span_ext; ++m)
                for (int h = 1; h <= m; ++h) {
                    uint64_t n_masks = uint64_t{1} << (m - 1);
                    for (uint64_t mask = 0; mask < n_masks; ++mask) {
                        double v = cur[static_cast<size_t>(sid(m, h, mask))];
                        if (v == 0.0) continue;
                        if (h + 1 <= span_ext) {
                            int to = h + 1 > m
                                         ? sid(h + 1, h + 1, mask)
                                         : sid(m, h + 1,
                                               mask | cover(h + 1, m - 1));
                            nxt[static_cast<size_t>(to)] += v * p_up;
                        }
                        if (h - 1 >= 1)
                            nxt[static_cast<size_t>(sid(
                                m, h - 1, mask | cover(h - 1, m - 1)))] +=
                                v * p_dn;
                        if (p_st > 0.0)
                            nxt[static_cast<size_t>(
                                sid(m, h, mask | cover(h, m - 1)))] += v * p_st;
                    }
                }
            std::swap(cur, nxt);
        }
        for (int s = 1; s <= span_ext; ++s) {
            double tot = 0.0;
            uint64_t n_masks = uint64_t{1} << (s - 1);
            auto& as = acc[static_cast<size_t>(s)];
            for (uint64_t mask = 0; mask < n_masks; ++mask) {
                double v = cur[static_cast<size_t>(sid(s, s, mask))];
                as[static_cast<size_t>(mask)] += v;
                tot += v;
            }
            leg_prev[static_cast<size_t>(s)] = leg_now[static_cast<size_t>(s)];
            leg_now[static_cast<size_t>(s)] = tot;
            leg_tot[static_cast<size_t>(s)] += tot;
        }
    }

    double total = 0.0;
    std::vector<double> pair_s(static_cast<size_t>(span_ext + 1), 0.0);
    for (int s = 1; s <= span_ext; ++s) {
        size_t n_masks = size_t{1} << (s - 1);
        size_t full = n_masks - 1;
        std::vector<double> ss = acc[static_cast<size_t>(s)];
        for (int bit = 0; bit < s - 1; ++bit)
            for (size_t mask = 0; mask < n_masks; ++mask)
                if (!(mask & (size_t{1} << bit)))
                    ss[mask] += ss[mask | (size_t{1} << bit)];
        double w = 0.0;
        for (size_t m1 = 0; m1 < n_masks; ++m1)
            if (acc[static_cast<size_t>(s)][m1] > 0.0)
                w += acc[static_cast<size_t>(s)][m1] * ss[full & ~m1];
        // legs longer than t_cap: geometric duration remainder, joined
        // against anything
        double last = leg_now[static_cast<size_t>(s)];
        if (last > 0.0) {
            double r = leg_prev[static_cast<size_t>(s)] > 0.0
                           ? last / leg_prev[static_cast<size_t>(s)]
                           : 1.0;
            if (r >= 1.0) return inf;
            double tail = last * r / (1.0 - r);
            w += 2.0 * tail * (leg_tot[static_cast<size_t>(s)] + tail);
        }
        pair_s[static_cast<size_t>(s)] = w;
        total += w;
    }
    // spans beyond span_ext: geometric extrapolation of the per-span pair
    // masses (covering every interior level costs a bounded factor per level)
    double ps = pair_s[static_cast<size_t>(span_ext)];
    double ps_prev = pair_s[static_cast<size_t>(span_ext - 1)];
    if (ps > 0.0) {
        double r = ps_prev > 0.0 ? ps / ps_prev : 1.0;
        if (r >= 1.0) return inf;
        total += ps * r / (1.0 - r);
    }
    return std::max(0.0, total - captured_tilted);
}

} // namespace

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

double n_step_mass(const WalkConfig& cfg, const PotentialSpec& spec,
                   double beta) {
    if (beta == 0.0) return 0.0;
    if (spec.kind == PotentialKind::PointMass) return phi(spec, beta, 1.0);
    // slope of -log G(N) over the largest window exact enumeration affords
    int n_max = 2;
    double nodes = 2.0 * cfg.d * 2.0 * cfg.d;
    while (n_max < 12) {
        nodes *= 2.0 * cfg.d;
        if (nodes > 3e6) break;
        ++n_max;
    }
    std::vector<double> xs, ys;
    for (int n = n_max / 2; n <= n_max; ++n) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(-std::log(exact_G(cfg, spec, beta, n, 1e9)));
    }
    return fit_line(xs, ys).slope;
}

StripTable build_strip_table(const WalkConfig& cfg, const PotentialSpec& spec,
                             double beta, const std::array<int, 8>& dy,
                             int cutoff) {
    Harvest h = harvest_legs(cfg, spec, beta, cutoff);
    return table_from_harvest(h, dy);
}

struct StripTableSet::Impl {
    bool sampled_mode = false;
    WalkConfig cfg{};
    PotentialSpec spec{};
    double beta = 0.0;
    int cutoff_ = 0;
    double mhat = 0.0;
    double phi1_ = 0.0;
    double x_unknown_ = 1.0;  // conditional trigger value of an unknown draw

    // reusable scratch for draw_sampled
    std::vector<int> t1_, t2_;
    std::vector<std::pair<uint64_t, int>> k1_, k2_;

    // enumerated engine
    std::optional<Harvest> harvest;
    std::unordered_map<uint64_t, StripTable> cache;
    std::optional<StripTable> far;

    // sampled engine
    std::optional<DpEngine> dp;

    const StripTable& table_for(const std::array<int, 8>& delta) {
        if (l1_perp(delta, cfg.d) > cutoff_) {
            if (!far) {
                std::array<int, 8> probe{};
                probe[cfg.d > 1 ? 1 : 0] = cfg.d > 1 ? cutoff_ + 1 : 0;
                far = table_from_harvest(*harvest, probe);
            }
            return *far;
        }
        uint64_t key = pack_site(delta.data(), cfg.d);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, table_from_harvest(*harvest, delta)).first;
        return it->second;
    }

    bool draw_enumerated(const std::array<int, 8>& delta, RngStream& rng,
                         StripDraw* out) {
        const StripTable& t = table_for(delta);
        double u = rng.next_double();
        if (u >= t.captured) return false;
        size_t lo = static_cast<size_t>(
            std::lower_bound(t.cum.begin(), t.cum.end(), u,
                             [](double c, double v) { return c <= v; }) -
            t.cum.begin());
        if (lo >= t.entries.size()) lo = t.entries.size() - 1;
        const StripEntry& e = t.entries[lo];
        out->n1 = e.n1;
        out->n2 = e.n2;
        out->d_off = e.d_off;
        out->zeta = e.zeta;
        return true;
    }

    bool draw_sampled(const std::array<int, 8>& delta, RngStream& rng,
                      StripDraw* out) {
        const DpEngine& e = *dp;
        double u = rng.next_double();
        if (u >= e.captured) return false;
        size_t ci = static_cast<size_t>(
            std::lower_bound(e.class_cum.begin(), e.class_cum.end(), u,
                             [](double c, double v) { return c <= v; }) -
            e.class_cum.begin());
        if (ci >= e.classes.size()) ci = e.classes.size() - 1;
        int s = e.classes[ci].s, n1 = e.classes[ci].n1, n2 = e.classes[ci].n2;
        int n_masks = 1 << (s - 1);
        int full = n_masks - 1;

        // mask of leg 1, then a compatible mask for leg 2
        double tot = 0.0;
        for (int m1 = 0; m1 < n_masks; ++m1) {
            double a = e.A[static_cast<size_t>(s)][static_cast<size_t>(n1)]
                          [static_cast<size_t>(m1)];
            if (a > 0.0)
                tot += a * e.SS[static_cast<size_t>(s)][static_cast<size_t>(n2)]
                              [static_cast<size_t>(full & ~m1)];
        }
        double u1 = rng.next_double() * tot;
        int m1 = 0;
        for (int m = 0; m < n_masks; ++m) {
            double a = e.A[static_cast<size_t>(s)][static_cast<size_t>(n1)]
                          [static_cast<size_t>(m)];
            if (a <= 0.0) continue;
            double w = a * e.SS[static_cast<size_t>(s)][static_cast<size_t>(n2)]
                              [static_cast<size_t>(full & ~m)];
            u1 -= w;
            m1 = m;
            if (u1 < 0.0) break;
        }
        int need = full & ~m1;
        double tot2 = e.SS[static_cast<size_t>(s)][static_cast<size_t>(n2)]
                          [static_cast<size_t>(need)];
        double u2 = rng.next_double() * tot2;
        int m2 = need;
        for (int m = 0; m < n_masks; ++m) {
            if ((m & need) != need) continue;
            double a = e.A[static_cast<size_t>(s)][static_cast<size_t>(n2)]
                          [static_cast<size_t>(m)];
            if (a <= 0.0) continue;
            u2 -= a;
            m2 = m;
            if (u2 < 0.0) break;
        }

        e.sample_leg(s, n1, m1, rng, &t1_);
        e.sample_leg(s, n2, m2, rng, &t2_);
        bool near = l1_perp(delta, cfg.d) <= n1 + n2;
        std::array<int, 8> d1{}, d2{}, zero{};
        realize_leg(t1_, cfg.d, zero, rng, near, &k1_, &d1);
        realize_leg(t2_, cfg.d, delta, rng, near, &k2_, &d2);
        int zeta = 0;
        if (near) {
            size_t i = 0, j = 0;
            while (i < k1_.size() && j < k2_.size()) {
                if (k1_[i].first < k2_[j].first) {
                    ++i;
                } else if (k2_[j].first < k1_[i].first) {
                    ++j;
                } else {
                    zeta += k1_[i].second + k2_[j].second;
                    ++i;
                    ++j;
                }
            }
        }
        out->n1 = n1;
        out->n2 = n2;
        for (int i = 0; i < 8; ++i)
            out->d_off[static_cast<size_t>(i)] =
                d2[static_cast<size_t>(i)] - d1[static_cast<size_t>(i)];
        out->d_off[0] = 0;
        out->zeta = zeta;
        return true;
    }
};

StripTableSet::StripTableSet() = default;
StripTableSet::~StripTableSet() = default;
StripTableSet::StripTableSet(StripTableSet&&) noexcept = default;
StripTableSet& StripTableSet::operator=(StripTableSet&&) noexcept = default;

StripTableSet StripTableSet::enumerated(const WalkConfig& cfg,
                                        const PotentialSpec& spec, double beta,
                                        int cutoff) {
    auto impl = std::make_unique<Impl>();
    impl->sampled_mode = false;
    impl->cfg = cfg;
    impl->spec = spec;
    impl->beta = beta;
    impl->cutoff_ = cutoff;
    impl->harvest = harvest_legs(cfg, spec, beta, cutoff);
    impl->mhat = impl->harvest->m_hat;
    impl->phi1_ = phi(spec, beta, 1.0);
    const StripTable& t0 = impl->table_for(std::array<int, 8>{});
    double uncap = 1.0 - t0.captured;
    if (uncap > 1e-15) {
        // entry weights are at most pure walk mass times e^{m_hat T}, so the
        // pure-walk extension at tilt m_hat + phi1 dominates the uncaptured
        // tilted mass
        double captured_t = 0.0;
        for (const StripEntry& e : t0.entries)
            captured_t += e.p * std::exp(impl->phi1_ * (e.n1 + e.n2));
        int t_cap = std::max(800, 2 * cutoff);
        double u = std::exp(2.0 * impl->phi1_) *
                   uncaptured_tilted_mass(cfg, impl->mhat + impl->phi1_,
                                          cutoff - 1, t_cap, captured_t);
        impl->x_unknown_ = std::max(1.0, u / uncap);
    }
    StripTableSet out;
    out.impl_ = std::move(impl);
    return out;
}

StripTableSet StripTableSet::sampled(const WalkConfig& cfg,
                                     const PotentialSpec& spec, double beta,
                                     int span_max, int cutoff) {
    if (cfg.h <= 0.0)
        throw std::invalid_argument("strip table needs forward drift h > 0");
    if (!exact_tilt(spec, beta))
        throw std::invalid_argument(
            "sampled strip engine needs a per-step potential (beta = 0 or "
            "point mass)");
    if (span_max < 1 || span_max > 14)
        throw std::invalid_argument("sampled engine span_max out of [1, 14]");
    if (cutoff < 2 || cutoff > 500)
        throw std::invalid_argument("sampled engine cutoff out of [2, 500]");
    double states = 0.0;
    for (int m = 1; m <= span_max; ++m) states += m * std::pow(2.0, m - 1);
    if (states * cutoff > 4.0e7)
        throw std::invalid_argument(
            "sampled engine state table too large; reduce span_max or cutoff");
    auto impl = std::make_unique<Impl>();
    impl->sampled_mode = true;
    impl->cfg = cfg;
    impl->spec = spec;
    impl->beta = beta;
    impl->cutoff_ = cutoff;
    impl->mhat = n_step_mass(cfg, spec, beta);
    impl->phi1_ = phi(spec, beta, 1.0);
    impl->dp.emplace(cfg, span_max, cutoff);
    // the exact tilt cancels the energy against e^{m_hat n}, so classes carry
    // pure walk mass: the tilted uncaptured mass is the renewal-inversion
    // total minus the tilted sum over captured classes, exactly
    double uncap = 1.0 - impl->dp->captured;
    if (uncap > 1e-15) {
        double captured_phi = 0.0, prev = 0.0;
        for (size_t i = 0; i < impl->dp->classes.size(); ++i) {
            double w = impl->dp->class_cum[i] - prev;
            prev = impl->dp->class_cum[i];
            captured_phi += w * std::exp(impl->phi1_ *
                                         (impl->dp->classes[i].n1 +
                                          impl->dp->classes[i].n2));
        }
        int t_cap = std::max(800, 2 * cutoff);
        double u = std::exp(2.0 * impl->phi1_) *
                   uncaptured_tilted_mass(cfg, impl->phi1_, span_max, t_cap,
                                          captured_phi);
        impl->x_unknown_ = std::max(1.0, u / uncap);
    }
    StripTableSet out;
    out.impl_ = std::move(impl);
    return out;
}

bool StripTableSet::draw(const std::array<int, 8>& delta, RngStream& rng,
                         StripDraw* out) {
    return impl_->sampled_mode ? impl_->draw_sampled(delta, rng, out)
                               : impl_->draw_enumerated(delta, rng, out);
}

double StripTableSet::capture() const {
    return impl_->sampled_mode ? impl_->dp->captured
                               : impl_->table_for(std::array<int, 8>{}).captured;
}

double StripTableSet::rho_cap() const {
    return static_cast<double>(impl_->cutoff_ + 2);
}
double StripTableSet::unknown_value() const { return impl_->x_unknown_; }
double StripTableSet::phi1() const { return impl_->phi1_; }
double StripTableSet::m_hat() const { return impl_->mhat; }
int StripTableSet::cutoff() const { return impl_->cutoff_; }
int StripTableSet::dim() const { return impl_->cfg.d; }

SigmaChainStats simulate_sigma_chain(StripTableSet& tables, long long n_runs,
                                     long long max_steps, RngStream stream,
                                     double max_uncaptured) {
    SigmaChainStats st;
    st.n_runs = n_runs;
    st.max_steps = max_steps;
    st.rho_cap = tables.rho_cap();
    if (max_steps == 0 || n_runs == 0) return st;
    double uncap = 1.0 - tables.capture();
    if (uncap > max_uncaptured)
        throw std::runtime_error("uncaptured strip mass exceeds tolerance");

    const int d = tables.dim();
    const double phi1 = tables.phi1();
    const double x_unknown = tables.unknown_value();
    constexpr long long kPmfMax = 64;
    std::vector<long long> pmf_count(kPmfMax, 0);
    double sum = 0.0, sumsq = 0.0, rho_sum = 0.0;
    long long trig = 0, unknown = 0, residual = 0;

    for (long long r = 0; r < n_runs; ++r) {
        RngStream rng = stream.derive(static_cast<uint64_t>(r));
        std::array<int, 8> delta{};
        bool prev_eq = true;
        double x = 0.0;
        bool done = false;
        for (long long i = 1; i <= max_steps && !done; ++i) {
            StripDraw drawn;
            if (!tables.draw(delta, rng, &drawn)) {
                x = x_unknown;
                ++unknown;
                done = true;
                break;
            }
            std::array<int, 8> nd = delta;
            for (int a = 1; a < d; ++a)
                nd[static_cast<size_t>(a)] += drawn.d_off[static_cast<size_t>(a)];
            bool cur_eq = is_zero_perp(nd, d);
            int thr = (prev_eq && !cur_eq) ? 2 : 0;
            if (drawn.zeta > thr) {
                int rho = drawn.zeta + (cur_eq ? 2 : 0);
                x = std::exp(phi1 * rho);
                ++trig;
                rho_sum += rho;
                if (i <= kPmfMax) ++pmf_count[static_cast<size_t>(i - 1)];
                done = true;
                break;
            }
            delta = nd;
            prev_eq = cur_eq;
        }
        if (!done) ++residual;
        sum += x;
        sumsq += x * x;
    }

    double n = static_cast<double>(n_runs);
    st.contraction = sum / n;
    double var = (sumsq - sum * sum / n) / (n - 1.0);
    st.contraction_se = std::sqrt(std::max(0.0, var) / n);
    st.contraction_ci_hi = st.contraction + 1.96 * st.contraction_se;
    st.residual_frac = static_cast<double>(residual) / n;
    st.unknown_frac = static_cast<double>(unknown) / n;
    st.p_sigma1 = static_cast<double>(trig) / n;
    st.mean_rho = trig > 0 ? rho_sum / static_cast<double>(trig) : 0.0;

    st.sigma1_pmf.assign(pmf_count.size(), 0.0);
    for (size_t i = 0; i < pmf_count.size(); ++i)
        st.sigma1_pmf[i] = static_cast<double>(pmf_count[i]) / n;
    // P[sigma1 = m+1] lives at index m; fit from m >= 1
    std::vector<double> xs, ys;
    for (size_t m = 1; m < pmf_count.size(); ++m)
        if (pmf_count[m] >= 5) {
            xs.push_back(std::log(static_cast<double>(m)));
            ys.push_back(std::log(st.sigma1_pmf[m]));
        }
    if (xs.size() >= 3) {
        st.tail_fit = fit_line(xs, ys);
        st.slope_ok =
            st.tail_fit.slope <= -1.0 + 1.96 * st.tail_fit.slope_stderr;
    }

    // runs still alive at max_steps: extrapolate the fitted power-law tail of
    // sigma1 past the horizon and poison that mass at the worst per-trigger
    // value; when the fit is unusable or non-summable, poison the whole
    // residual fraction instead
    double future_trig = st.residual_frac;
    if (st.tail_fit.n >= 3 && st.tail_fit.slope < -1.0 - 1e-6) {
        double c_hat = std::exp(st.tail_fit.intercept +
                                1.96 * st.tail_fit.slope_stderr);
        double m0 = static_cast<double>(max_steps);
        double extrap = c_hat * std::pow(m0, st.tail_fit.slope + 1.0) /
                        (-st.tail_fit.slope - 1.0);
        future_trig = std::min(future_trig, extrap);
    }
    double x_future = std::max(std::exp(phi1 * st.rho_cap), x_unknown);
    st.conservative_upper = st.contraction_ci_hi + future_trig * x_future;
    return st;
}

namespace {

struct PairLeg {
    Path path;
    std::vector<int> height;
    std::vector<std::array<int, 8>> pos;
    uint64_t cov = 0;
    int span = 0;
    double weight = 0.0;
    std::vector<int> last_at;  // last visit time per level 1..span
};

// per-site visit counts over the window (M, N], shifted by offset
std::vector<std::pair<uint64_t, int>> window_sites(const PairLeg& leg, int M,
                                                   int N,
                                                   const std::array<int, 8>& off,
                                                   int d) {
    std::vector<uint64_t> keys;
    for (int t = M + 1; t <= N; ++t) {
        std::array<int, 8> q = leg.pos[static_cast<size_t>(t)];
        for (int i = 0; i < d; ++i) q[static_cast<size_t>(i)] += off[static_cast<size_t>(i)];
        keys.push_back(pack_site(q.data(), d));
    }
    std::sort(keys.begin(), keys.end());
    std::vector<std::pair<uint64_t, int>> out;
    for (size_t i = 0; i < keys.size();) {
        size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        out.emplace_back(keys[i], static_cast<int>(j - i));
        i = j;
    }
    return out;
}

} // namespace

StripCheckReport strip_inequality_check(const WalkConfig& cfg,
                                        const PotentialSpec& spec, double beta,
                                        int N1, int N2,
                                        const std::array<int, 8>& dy,
                                        double budget) {
    double est = std::pow(2.0 * cfg.d, N1) + std::pow(2.0 * cfg.d, N2);
    if (est > budget) throw BudgetExceeded(est, budget);
    const int d = cfg.d;
    const double mhat = n_step_mass(cfg, spec, beta);
    const double phi1 = phi(spec, beta, 1.0);

    auto collect = [&](int N) {
        std::vector<PairLeg> out;
        enumerate_paths(cfg, N, budget,
                        [&](double prob, const Path& path, const LocalTimeField&) {
            if (!is_bridge(path)) return;
            PairLeg leg;
            leg.path = path;
            leg.span = bridge_span(path);
            leg.cov = covered_levels(path);
            leg.weight = prob;
            std::array<int, 8> p{};
            leg.pos.push_back(p);
            leg.height.push_back(0);
            for (int e : path.steps) {
                p[e >> 1] += (e & 1) ? -1 : +1;
                leg.pos.push_back(p);
                leg.height.push_back(p[0]);
            }
            leg.last_at.assign(static_cast<size_t>(leg.span + 1), -1);
            for (int t = 0; t <= N; ++t) {
                int hgt = leg.height[static_cast<size_t>(t)];
                if (hgt >= 1 && hgt <= leg.span)
                    leg.last_at[static_cast<size_t>(hgt)] = t;
            }
            out.push_back(std::move(leg));
        });
        return out;
    };
    std::vector<PairLeg> b1 = collect(N1);
    std::vector<PairLeg> b2 = N1 == N2 ? b1 : collect(N2);

    StripCheckReport rep;
    rep.m_hat = mhat;
    std::array<int, 8> zero{};
    for (const PairLeg& a : b1)
        for (const PairLeg& b : b2) {
            if (a.span != b.span) continue;
            int s = a.span;
            uint64_t u = a.cov | b.cov;
            std::vector<int> cuts;
            for (int k = 1; k < s; ++k)
                if (!((u >> (k - 1)) & 1)) cuts.push_back(k);
            cuts.push_back(s);

            double sum_rho = 0.0;
            bool prev_eq = is_zero_perp(dy, d);
            if (prev_eq) sum_rho += 1.0;  // rho_0
            int t1p = 0, t2p = 0;
            for (int c : cuts) {
                int t1 = a.last_at[static_cast<size_t>(c)];
                int t2 = b.last_at[static_cast<size_t>(c)];
                auto s1 = window_sites(a, t1p, t1, zero, d);
                auto s2 = window_sites(b, t2p, t2, dy, d);
                int zeta = 0;
                size_t i = 0, j = 0;
                while (i < s1.size() && j < s2.size()) {
                    if (s1[i].first < s2[j].first) {
                        ++i;
                    } else if (s2[j].first < s1[i].first) {
                        ++j;
                    } else {
                        zeta += s1[i].second + s2[j].second;
                        ++i;
                        ++j;
                    }
                }
                bool cur_eq = true;
                for (int ax = 1; ax < d; ++ax)
                    if (b.pos[static_cast<size_t>(t2)][static_cast<size_t>(ax)] +
                            dy[static_cast<size_t>(ax)] !=
                        a.pos[static_cast<size_t>(t1)][static_cast<size_t>(ax)])
                        cur_eq = false;
                int thr = (prev_eq && !cur_eq) ? 2 : 0;
                if (zeta > thr) sum_rho += zeta + (cur_eq ? 2 : 0);
                prev_eq = cur_eq;
                t1p = t1;
                t2p = t2;
            }

            double lhs = -coupled_energy(a.path, b.path, spec, beta, dy) +
                         mhat * static_cast<double>(N1 + N2);
            double rhs = phi1 * sum_rho;
            ++rep.pairs_checked;
            double excess = lhs - rhs;
            if (excess > rep.max_log_excess) rep.max_log_excess = excess;
            if (excess > 1e-9) ++rep.violations;
        }
    return rep;
}

} // namespace rwrp
