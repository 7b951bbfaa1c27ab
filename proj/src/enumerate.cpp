#include "rwrp/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace rwrp {

// ---------------------------------------------------------------------------
// FlatCounter
// ---------------------------------------------------------------------------

FlatCounter::FlatCounter(std::size_t capacity_pow2)
    : keys_(capacity_pow2, 0), counts_(capacity_pow2, 0),
      mask_(capacity_pow2 - 1) {
    if (capacity_pow2 == 0 || (capacity_pow2 & mask_) != 0)
        throw std::invalid_argument("FlatCounter: capacity must be a power of two");
}

std::size_t FlatCounter::slot(uint64_t key) const {
    // SplitMix64 finalizer as the hash
    uint64_t z = key;
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<std::size_t>(z) & mask_;
}

int FlatCounter::increment(uint64_t key) {
    std::size_t i = slot(key);
    for (;;) {
        if (keys_[i] == key) return counts_[i]++;
        if (keys_[i] == 0) {
            if (live_ + 1 > keys_.size() / 2)
                throw std::runtime_error("FlatCounter: overfull");
            keys_[i] = key;
            counts_[i] = 1;
            ++live_;
            return 0;
        }
        i = (i + 1) & mask_;
    }
}

void FlatCounter::erase_slot(std::size_t i) {
    // backward-shift deletion for linear probing
    keys_[i] = 0;
    counts_[i] = 0;
    std::size_t j = i;
    for (;;) {
        j = (j + 1) & mask_;
        if (keys_[j] == 0) break;
        std::size_t home = slot(keys_[j]);
        // can keys_[j] legally move into the hole at i?
        bool movable = (i <= j) ? (home <= i || home > j) : (home <= i && home > j);
        if (movable) {
            keys_[i] = keys_[j];
            counts_[i] = counts_[j];
            keys_[j] = 0;
            counts_[j] = 0;
            i = j;
        }
    }
    --live_;
}

int FlatCounter::decrement(uint64_t key) {
    std::size_t i = slot(key);
    for (;;) {
        if (keys_[i] == key) {
            int left = --counts_[i];
            if (left == 0) erase_slot(i);
            return left;
        }
        if (keys_[i] == 0)
            throw std::runtime_error("FlatCounter: decrement of absent key");
        i = (i + 1) & mask_;
    }
}

int FlatCounter::at(uint64_t key) const {
    std::size_t i = slot(key);
    for (;;) {
        if (keys_[i] == key) return counts_[i];
        if (keys_[i] == 0) return 0;
        i = (i + 1) & mask_;
    }
}

void FlatCounter::clear() {
    std::fill(keys_.begin(), keys_.end(), 0);
    std::fill(counts_.begin(), counts_.end(), 0);
    live_ = 0;
}

// ---------------------------------------------------------------------------
// shared DFS engine
// ---------------------------------------------------------------------------

namespace {

std::vector<double> phi_table(const PotentialSpec& spec, double beta, int max_count) {
    std::vector<double> t(static_cast<std::size_t>(max_count) + 1, 0.0);
    for (int c = 1; c <= max_count; ++c)
        t[static_cast<std::size_t>(c)] = phi(spec, beta, static_cast<double>(c));
    return t;
}

void check_budget(int two_d, int N, double budget) {
    double est = std::pow(static_cast<double>(two_d), static_cast<double>(N));
    if (est > budget) throw BudgetExceeded(est, budget);
}

uint64_t full_mask(int span) {
    return span >= 2 ? ((uint64_t{1} << (span - 1)) - 1) : 0;
}

// Depth-first enumeration over step sequences with optional bridge pruning.
// The leaf callback sees the engine state; energies are re-summed freshly at
// every leaf in first-visit site order, so no incremental rounding is carried
// between leaves.
struct Engine {
    StepLaw law;
    int d, N;
    bool bridge_prune = false;
    bool distinct_prune = false;   // refuse to revisit a counted site
    bool forbid_start = false;     // with distinct_prune: also refuse the start
    const std::vector<double>* phi_tab = nullptr;

    std::array<int, 8> pos{};
    uint64_t start_key = 0;
    int height = 0, runmax = 0;
    uint64_t covmask = 0;
    long long sumsq = 0;
    FlatCounter counts;
    std::vector<uint64_t> order;        // first-visit stack
    std::vector<double> prob_stack;     // prob_stack[t] = P[first t steps]
    std::vector<uint8_t> steps;
    double nodes = 0.0;
    double budget = 0.0;

    std::function<void(Engine&)> leaf;

    Engine(const WalkConfig& cfg, int N_, double budget_)
        : law(step_law(cfg)), d(cfg.d), N(N_), counts(1024), budget(budget_) {
        prob_stack.assign(static_cast<std::size_t>(N) + 1, 0.0);
        prob_stack[0] = 1.0;
        steps.assign(static_cast<std::size_t>(N), 0);
        order.reserve(static_cast<std::size_t>(N) + 1);
        start_key = pack_site(pos.data(), d);
    }

    void set_start(const std::array<int, 8>& s) {
        pos = s;
        height = s[0];
        runmax = s[0];
        start_key = pack_site(pos.data(), d);
    }

    double energy() const {
        if (!phi_tab) return 0.0;
        double e = 0.0;
        for (uint64_t key : order)
            e += (*phi_tab)[static_cast<std::size_t>(counts.at(key))];
        return e;
    }

    double weight() const { return prob_stack[steps_done]; }

    int steps_done = 0;

    void run() {
        recurse();
    }

    void recurse() {
        nodes += 1.0;
        if (nodes > budget * 1.000001 + 16.0)
            throw BudgetExceeded(nodes, budget);
        int t = steps_done;
        if (t == N) {
            leaf(*this);
            return;
        }
        if (bridge_prune && runmax - height > N - t) return;  // cannot end on top
        int two_d = 2 * d;
        for (int e = 0; e < two_d; ++e) {
            int axis = e >> 1;
            int dir = (e & 1) ? -1 : +1;
            int nh = height + (axis == 0 ? dir : 0);
            if (bridge_prune && nh < 1) continue;
            pos[axis] += dir;
            uint64_t key = pack_site(pos.data(), d);
            if (distinct_prune &&
                (counts.at(key) > 0 || (forbid_start && key == start_key))) {
                pos[axis] -= dir;
                continue;
            }
            int old_h = height, old_m = runmax;
            uint64_t old_cov = covmask;
            height = nh;
            if (nh > runmax) {
                runmax = nh;
            } else {
                // descent/stay below the running max covers [max(nh,1), m-1]
                int lo = nh > 1 ? nh : 1;
                for (int r = lo; r <= runmax - 1; ++r)
                    covmask |= uint64_t{1} << (r - 1);
            }
            int before = counts.increment(key);
            if (before == 0) order.push_back(key);
            sumsq += 2 * before + 1;
            steps[static_cast<std::size_t>(t)] = static_cast<uint8_t>(e);
            prob_stack[static_cast<std::size_t>(t) + 1] =
                prob_stack[static_cast<std::size_t>(t)] * law.step_prob(e);
            ++steps_done;

            recurse();

            --steps_done;
            sumsq -= 2 * before + 1;
            if (counts.decrement(key) == 0) order.pop_back();
            height = old_h;
            runmax = old_m;
            covmask = old_cov;
            pos[axis] -= dir;
        }
    }
};

} // namespace

// ---------------------------------------------------------------------------
// public engines
// ---------------------------------------------------------------------------

void enumerate_paths(const WalkConfig& cfg, int N, double budget,
                     const PathVisitor& visit) {
    check_budget(2 * cfg.d, N, budget);
    Engine eng(cfg, N, budget);
    Path p;
    p.d = cfg.d;
    eng.leaf = [&](Engine& e) {
        p.steps.assign(e.steps.begin(), e.steps.end());
        visit(e.weight(), p, local_times(p));
    };
    eng.run();
}

double exact_G(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
               int N, double budget) {
    check_budget(2 * cfg.d, N, budget);
    auto tab = phi_table(spec, beta, N);
    Engine eng(cfg, N, budget);
    eng.phi_tab = &tab;
    double sum = 0.0;
    eng.leaf = [&](Engine& e) { sum += e.weight() * std::exp(-e.energy()); };
    eng.run();
    return sum;
}

namespace {

BridgeSpectrum bridge_like_spectrum(const WalkConfig& cfg,
                                    const PotentialSpec& spec, double beta,
                                    int N, double budget, bool irreducible_only) {
    if (N > 63)
        throw std::invalid_argument("bridge spectrum: N too large for cover masks");
    check_budget(2 * cfg.d, N, budget);
    BridgeSpectrum out;
    out.by_span.assign(static_cast<std::size_t>(N) + 1, 0.0);
    if (N == 0) {
        // the empty path is the span-0 bridge (and trivially irreducible)
        out.by_span[0] = 1.0;
        out.total = 1.0;
        return out;
    }
    auto tab = phi_table(spec, beta, N);
    Engine eng(cfg, N, budget);
    eng.phi_tab = &tab;
    eng.bridge_prune = true;
    eng.leaf = [&](Engine& e) {
        if (e.height != e.runmax) return;
        int span = e.runmax;
        if (irreducible_only && e.covmask != full_mask(span)) return;
        double term = e.weight() * std::exp(-e.energy());
        out.by_span[static_cast<std::size_t>(span)] += term;
    };
    eng.run();
    for (double b : out.by_span) out.total += b;
    return out;
}

} // namespace

BridgeSpectrum exact_bridge_spectrum(const WalkConfig& cfg,
                                     const PotentialSpec& spec, double beta,
                                     int N, double budget) {
    return bridge_like_spectrum(cfg, spec, beta, N, budget, false);
}

double exact_B(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
               int N, double budget) {
    return exact_bridge_spectrum(cfg, spec, beta, N, budget).total;
}

BridgeSpectrum exact_irreducible_spectrum(const WalkConfig& cfg,
                                          const PotentialSpec& spec,
                                          double beta, int N, double budget) {
    return bridge_like_spectrum(cfg, spec, beta, N, budget, true);
}

std::vector<double> restricted_profile(const WalkConfig& cfg,
                                       const PotentialSpec& spec, double beta,
                                       int N, double budget) {
    check_budget(2 * cfg.d, N, budget);
    auto tab = phi_table(spec, beta, N);
    Engine eng(cfg, N, budget);
    eng.phi_tab = &tab;
    std::vector<double> prof(static_cast<std::size_t>(N) * N + 1, 0.0);
    if (N == 0) {
        prof.assign(1, 1.0);
        return prof;
    }
    eng.leaf = [&](Engine& e) {
        prof[static_cast<std::size_t>(e.sumsq)] += e.weight() * std::exp(-e.energy());
    };
    eng.run();
    return prof;
}

double exact_restricted_G(const WalkConfig& cfg, const PotentialSpec& spec,
                          double beta, int N, double k, double budget) {
    auto prof = restricted_profile(cfg, spec, beta, N, budget);
    double cap = k * static_cast<double>(N);
    long long thr = static_cast<long long>(std::floor(cap + 1e-9));
    double sum = 0.0;
    for (std::size_t s = 0; s < prof.size(); ++s)
        if (static_cast<long long>(s) <= thr) sum += prof[s];
    return sum;
}

long long saw_count(int d, int N, double budget) {
    check_budget(2 * d, N, budget);
    WalkConfig cfg{d, 0.0};
    Engine eng(cfg, N, budget);
    eng.distinct_prune = true;
    eng.forbid_start = true;
    long long n = 0;
    eng.leaf = [&](Engine&) { ++n; };
    eng.run();
    return n;
}

double saw_weight_sum(const WalkConfig& cfg, const PotentialSpec& spec,
                      double beta, int N, double budget) {
    // distinct visited sites over (0, N]; a single return to the start site is
    // allowed, matching the ||ell||^2 = N slice of the restricted profile
    check_budget(2 * cfg.d, N, budget);
    auto tab = phi_table(spec, beta, N);
    Engine eng(cfg, N, budget);
    eng.phi_tab = &tab;
    eng.distinct_prune = true;
    double sum = 0.0;
    eng.leaf = [&](Engine& e) { sum += e.weight() * std::exp(-e.energy()); };
    eng.run();
    return sum;
}

// ---------------------------------------------------------------------------
// path tables and coupled pair sums
// ---------------------------------------------------------------------------

PathTable build_path_table(const WalkConfig& cfg, int N, double budget,
                           bool bridges_only, const std::array<int, 8>& start_offset) {
    if (start_offset[0] != 0)
        throw std::invalid_argument("build_path_table: offset must be perpendicular");
    check_budget(2 * cfg.d, N, budget);
    PathTable table;
    table.d = cfg.d;
    table.n_steps = N;
    Engine eng(cfg, N, budget);
    eng.bridge_prune = bridges_only;
    eng.set_start(start_offset);
    eng.leaf = [&](Engine& e) {
        int span = -1;
        if (N == 0) {
            span = 0;
        } else if (e.height == e.runmax && e.runmax >= 1) {
            bool ok = true;
            if (!bridges_only) {
                // engine did not prune, so recheck S1(n) >= 1 along the path
                int h = 0;
                for (int t = 0; t < N && ok; ++t) {
                    int s = e.steps[static_cast<std::size_t>(t)];
                    if ((s >> 1) == 0) h += (s & 1) ? -1 : +1;
                    if (h < 1) ok = false;
                }
            }
            if (ok) span = e.runmax;
        }
        if (bridges_only && span < 0) return;
        PathTableEntry ent;
        ent.weight = e.weight();
        ent.span = span;
        ent.sites.reserve(e.order.size());
        for (uint64_t key : e.order)
            ent.sites.emplace_back(key, e.counts.at(key));
        std::sort(ent.sites.begin(), ent.sites.end());
        table.entries.push_back(std::move(ent));
    };
    eng.run();
    return table;
}

double quenched_partition(const PathTable& table, const Environment& env,
                          double beta) {
    double z = 0.0;
    for (const auto& ent : table.entries) {
        double s = 0.0;
        for (const auto& [key, ell] : ent.sites)
            s += static_cast<double>(ell) * env.value(key);
        z += (beta == 0.0) ? ent.weight
                           : ent.weight * std::exp(-beta * s);
    }
    return z;
}

double annealed_partition(const PathTable& table, const PotentialSpec& spec,
                          double beta) {
    auto tab = phi_table(spec, beta, table.n_steps);
    double z = 0.0;
    for (const auto& ent : table.entries) {
        double e = 0.0;
        for (const auto& [key, ell] : ent.sites)
            e += tab[static_cast<std::size_t>(ell)];
        z += ent.weight * std::exp(-e);
    }
    return z;
}

namespace {

// coupled energy of one table pair via sorted-merge of the site lists
double coupled_pair_energy(const PathTableEntry& a, const PathTableEntry& b,
                           const std::vector<double>& tab) {
    double e = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.sites.size() && j < b.sites.size()) {
        if (a.sites[i].first < b.sites[j].first) {
            e += tab[static_cast<std::size_t>(a.sites[i].second)];
            ++i;
        } else if (a.sites[i].first > b.sites[j].first) {
            e += tab[static_cast<std::size_t>(b.sites[j].second)];
            ++j;
        } else {
            e += tab[static_cast<std::size_t>(a.sites[i].second + b.sites[j].second)];
            ++i;
            ++j;
        }
    }
    for (; i < a.sites.size(); ++i)
        e += tab[static_cast<std::size_t>(a.sites[i].second)];
    for (; j < b.sites.size(); ++j)
        e += tab[static_cast<std::size_t>(b.sites[j].second)];
    return e;
}

} // namespace

double paired_second_moment(const PathTable& t1, const PathTable& t2,
                            const PotentialSpec& spec, double beta) {
    auto tab = phi_table(spec, beta, t1.n_steps + t2.n_steps);
    double sum = 0.0;
    for (const auto& a : t1.entries) {
        double row = 0.0;
        for (const auto& b : t2.entries)
            row += b.weight * std::exp(-coupled_pair_energy(a, b, tab));
        sum += a.weight * row;
    }
    return sum;
}

double exact_second_moment(const WalkConfig& cfg, const PotentialSpec& spec,
                           double beta, int N1, int N2,
                           const std::array<int, 8>& dy, double budget) {
    check_budget(2 * cfg.d, N1 + N2, budget);
    PathTable t1 = build_path_table(cfg, N1, budget, false, {});
    PathTable t2 = build_path_table(cfg, N2, budget, false, dy);
    return paired_second_moment(t1, t2, spec, beta);
}

double exact_pair_coupled_bridge(const WalkConfig& cfg,
                                 const PotentialSpec& spec, double beta,
                                 int N1, int N2, const std::array<int, 8>& dy,
                                 double budget) {
    check_budget(2 * cfg.d, N1 + N2, budget);
    PathTable t1 = build_path_table(cfg, N1, budget, true, {});
    PathTable t2 = build_path_table(cfg, N2, budget, true, dy);
    auto tab = phi_table(spec, beta, N1 + N2);
    double sum = 0.0;
    for (const auto& a : t1.entries) {
        double row = 0.0;
        for (const auto& b : t2.entries) {
            if (b.span != a.span) continue;  // common end hyperplane
            row += b.weight * std::exp(-coupled_pair_energy(a, b, tab));
        }
        sum += a.weight * row;
    }
    return sum;
}

} // namespace rwrp
