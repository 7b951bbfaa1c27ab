#include "rwrp/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rwrp/enumerate.hpp"
#include "rwrp/fit.hpp"
#include "rwrp/projection.hpp"

namespace rwrp {

namespace {

std::vector<double> neglog(const std::vector<double>& v) {
    std::vector<double> y(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0))
            throw std::invalid_argument("estimate_mass: series must be positive");
        y[i] = -std::log(v[i]);
    }
    return y;
}

// replica read-outs from one single-walk span series
double replica_bridge(const SpanSeries& s, int p, int L) {
    double b = s.bridge(L);
    return p == 2 ? b * b : b;
}
double replica_irreducible(const SpanSeries& s, int p, int L) {
    return p == 2 ? s.irreducible2(L) : s.irreducible(L);
}
double replica_slack(const SpanSeries& s, int p, int L, double t) {
    if (p == 1) return t;
    double b = s.bridge(L);
    return 2.0 * b * t + t * t;
}

void require_p(int p) {
    if (p != 1 && p != 2)
        throw std::invalid_argument("replica count must be 1 or 2");
}

} // namespace

MassEstimate estimate_mass(const std::vector<double>& series, int L_lo,
                           MassMethod method) {
    return estimate_mass(series, std::vector<double>(series.size(), 0.0), L_lo,
                         method);
}

MassEstimate estimate_mass(const std::vector<double>& series,
                           const std::vector<double>& tails, int L_lo,
                           MassMethod method) {
    if (series.size() != tails.size())
        throw std::invalid_argument("estimate_mass: tails size mismatch");
    if (series.empty())
        throw std::invalid_argument("estimate_mass: empty series");
    auto y = neglog(series);
    MassEstimate out;
    out.method = method;
    out.L_lo = L_lo;
    out.L_hi = L_lo + static_cast<int>(series.size()) - 1;
    if (method == MassMethod::SlopeFit) {
        if (series.size() < 2)
            throw std::invalid_argument("estimate_mass: slope fit needs >= 2 points");
        std::vector<double> x(series.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = static_cast<double>(L_lo + static_cast<int>(i));
        LineFit fit = fit_line(x, y);
        out.m_hat = fit.slope;
        out.stderr_ = fit.slope_stderr;
        // worst-case slope shift if every point moves by its log-slack
        double umax = 0.0;
        for (std::size_t i = 0; i < series.size(); ++i)
            umax = std::max(umax, std::log1p(tails[i] / series[i]));
        double span = x.back() - x.front();
        out.slack_halfwidth = span > 0 ? 2.0 * umax / span : umax;
    } else {
        double best = std::numeric_limits<double>::infinity();
        double slack_at = 0.0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            double L = static_cast<double>(L_lo + static_cast<int>(i));
            double r = y[i] / L;
            if (r < best) {
                best = r;
                slack_at = std::log1p(tails[i] / series[i]) / L;
            }
        }
        out.m_hat = best;
        out.slack_halfwidth = slack_at;
    }
    return out;
}

MassBounds mass_bounds(const std::vector<double>& series,
                       const std::vector<double>& tails, int L_lo, double log_c) {
    if (series.empty() || series.size() != tails.size())
        throw std::invalid_argument("mass_bounds: bad input");
    MassBounds b;
    b.upper = std::numeric_limits<double>::infinity();
    b.lower = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < series.size(); ++i) {
        double L = static_cast<double>(L_lo + static_cast<int>(i));
        b.upper = std::min(b.upper, -std::log(series[i]) / L);
        b.lower = std::max(b.lower, (log_c - std::log(series[i] + tails[i])) / L);
    }
    return b;
}

PiSequence pi_sequence(const WalkConfig& cfg, const PotentialSpec& spec,
                       double beta, int p, int K, double tol, double budget) {
    require_p(p);
    if (K < 3) throw std::invalid_argument("pi_sequence: need K >= 3");
    BridgeSeries bs = bridge_span_series(cfg, spec, beta, K, tol, budget);
    PiSequence out;
    out.engine = bs.engine;
    std::vector<double> bp(static_cast<std::size_t>(K)), tails(static_cast<std::size_t>(K));
    for (int L = 1; L <= K; ++L) {
        bp[static_cast<std::size_t>(L - 1)] = replica_bridge(bs.series, p, L);
        tails[static_cast<std::size_t>(L - 1)] =
            replica_slack(bs.series, p, L, bs.series.tail);
    }
    MassEstimate m = estimate_mass(bp, tails, 1, MassMethod::SlopeFit);
    out.m_hat = m.m_hat;
    out.pi.resize(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        out.pi[static_cast<std::size_t>(k - 1)] =
            replica_irreducible(bs.series, p, k) * std::exp(out.m_hat * k);
        out.sum += out.pi[static_cast<std::size_t>(k - 1)];
        out.mean += k * out.pi[static_cast<std::size_t>(k - 1)];
    }
    // epsilon(T) = sum_{j >= T+2} j pi(j), extended past K by the observed ratio
    double pK = out.pi[static_cast<std::size_t>(K - 1)];
    double pK1 = out.pi[static_cast<std::size_t>(K - 2)];
    double r = (pK > 0.0 && pK1 > 0.0) ? pK / pK1 : 0.0;
    r = std::clamp(r, 0.0, 0.999);
    out.tail_ratio = r;
    out.eps.assign(static_cast<std::size_t>(K - 1), 0.0);
    for (int T = 0; T <= K - 2; ++T) {
        double e = 0.0;
        for (int j = T + 2; j <= K; ++j)
            e += j * out.pi[static_cast<std::size_t>(j - 1)];
        if (r > 0.0) {
            // sum_{j >= J} j r^{j-K} = r^{J-K} (J/(1-r) + r/(1-r)^2)
            int J = std::max(T + 2, K + 1);
            double geom = std::pow(r, J - K) *
                          (J / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
            e += pK * geom;
            out.eps_extrapolated = true;
        }
        out.eps[static_cast<std::size_t>(T)] = e;
    }
    return out;
}

RenewalResidual renewal_residual(const WalkConfig& cfg, const PotentialSpec& spec,
                                 double beta, int p, int L, double budget) {
    require_p(p);
    if (L < 1) throw std::invalid_argument("renewal_residual: L must be >= 1");
    BridgeSeries bs = bridge_span_series(cfg, spec, beta, L,
                                         std::numeric_limits<double>::infinity(),
                                         budget);
    double t = bs.series.tail;
    RenewalResidual out;
    out.bridge.resize(static_cast<std::size_t>(L));
    out.irreducible.resize(static_cast<std::size_t>(L));
    for (int k = 1; k <= L; ++k) {
        out.bridge[static_cast<std::size_t>(k - 1)] = replica_bridge(bs.series, p, k);
        out.irreducible[static_cast<std::size_t>(k - 1)] =
            replica_irreducible(bs.series, p, k);
    }
    auto B = [&](int k) {
        return k == 0 ? 1.0 : out.bridge[static_cast<std::size_t>(k - 1)];
    };
    double conv = 0.0, slack = replica_slack(bs.series, p, L, t);
    for (int k = 1; k <= L; ++k) {
        double lam = out.irreducible[static_cast<std::size_t>(k - 1)];
        conv += lam * B(L - k);
        slack += replica_slack(bs.series, p, k, t) * B(L - k) +
                 lam * (L - k == 0 ? 0.0 : replica_slack(bs.series, p, L - k, t));
    }
    out.residual = std::abs(B(L) - conv);
    out.slack = slack;
    return out;
}

MassGap mass_gap(const WalkConfig& cfg, const PotentialSpec& spec, double beta,
                 int p, int L_lo, int L_hi, double budget) {
    require_p(p);
    if (L_lo < 1 || L_hi < L_lo + 1)
        throw std::invalid_argument("mass_gap: need a window with >= 2 spans");
    BridgeSeries bs = bridge_span_series(cfg, spec, beta, L_hi,
                                         std::numeric_limits<double>::infinity(),
                                         budget);
    double t = bs.series.tail;
    MassGap out;
    std::size_t n = static_cast<std::size_t>(L_hi - L_lo + 1);
    std::vector<double> bp(n), lp(n), tb(n), tl(n);
    for (int L = L_lo; L <= L_hi; ++L) {
        std::size_t i = static_cast<std::size_t>(L - L_lo);
        bp[i] = replica_bridge(bs.series, p, L);
        lp[i] = replica_irreducible(bs.series, p, L);
        tb[i] = replica_slack(bs.series, p, L, t);
        tl[i] = replica_slack(bs.series, p, L, t);
        out.rows.push_back({L, bp[i], lp[i], tb[i], tl[i]});
    }
    out.mB = estimate_mass(bp, tb, L_lo, MassMethod::SlopeFit);
    out.mLambda = estimate_mass(lp, tl, L_lo, MassMethod::SlopeFit);
    out.gap = out.mLambda.m_hat - out.mB.m_hat;
    out.ci95 = 1.96 * std::sqrt(out.mB.stderr_ * out.mB.stderr_ +
                                out.mLambda.stderr_ * out.mLambda.stderr_) +
               out.mB.slack_halfwidth + out.mLambda.slack_halfwidth;

    for (std::size_t i = 0; i < n; ++i)
        if (lp[i] > bp[i] + tb[i] + tl[i]) out.pointwise_ok = false;

    StepLaw law = step_law(cfg);
    double phi1 = phi(spec, beta, 1.0);
    double env_c = (1.0 / p) * std::exp(2.0 * (phi1 + law.lambda));
    for (std::size_t i = 0; i < n; ++i) {
        double L = static_cast<double>(L_lo + static_cast<int>(i));
        double envelope = env_c * std::exp(-out.mLambda.m_hat * L);
        if (lp[i] > envelope * (1.0 + 1e-9) + tl[i]) out.envelope_ok = false;
    }

    if (p == 1 && projection_measurable(spec, beta)) {
        out.sandwich_checked = true;
        double alpha = escape_prob(cfg);
        MassBounds mb = mass_bounds(bp, tb, L_lo, std::log(alpha));
        for (int L = L_lo; L <= L_hi; ++L) {
            PlaneSum g = truncated_point_to_plane(cfg, spec, beta, L,
                                                  PlaneKind::EndpointG, 1e-10,
                                                  budget);
            double lo = alpha * std::exp(-mb.upper * L);
            double hi = std::exp(-mb.lower * L) / (alpha * alpha);
            if (g.value + g.certified_tail < lo * (1.0 - 1e-9) ||
                g.value > hi * (1.0 + 1e-9))
                out.sandwich_ok = false;
        }
    } else {
        out.sandwich_checked = false;
    }
    return out;
}

HBarSolution solve_h_bar(const WalkConfig& cfg, const PotentialSpec& spec,
                         double beta, double tol_h, double budget) {
    const int Lmax = 8, L_lo = 3;
    auto mass_at = [&](double drift) {
        WalkConfig c{cfg.d, drift};
        BridgeSeries bs = bridge_span_series(c, spec, beta, Lmax,
                                             std::numeric_limits<double>::infinity(),
                                             budget);
        std::vector<double> bp, tails;
        for (int L = L_lo; L <= Lmax; ++L) {
            bp.push_back(bs.series.bridge(L));
            tails.push_back(bs.series.tail);
        }
        return estimate_mass(bp, tails, L_lo, MassMethod::SlopeFit).m_hat;
    };
    HBarSolution out;
    out.mass_at_h = mass_at(cfg.h);
    double lo = 0.0, hi = cfg.h;
    double f_lo = mass_at(1e-4) + 1e-4 - cfg.h;
    if (f_lo >= 0.0)
        throw std::domain_error("solve_h_bar: no sub-drift root (not ballistic)");
    while (hi - lo > tol_h && out.iters < 60) {
        double mid = 0.5 * (lo + hi);
        double f = (mid <= 0.0 ? f_lo : mass_at(mid) + mid - cfg.h);
        if (f < 0.0)
            lo = mid;
        else
            hi = mid;
        ++out.iters;
    }
    out.h_bar = 0.5 * (lo + hi);
    out.gap_pred = lambda_drift(cfg) - lambda_drift(WalkConfig{cfg.d, out.h_bar});
    return out;
}

BetaCBracket solve_beta_c(const WalkConfig& cfg, const PotentialSpec& spec,
                          double h_target, double budget) {
    if (h_target <= 0.0)
        throw std::invalid_argument("solve_beta_c: target drift must be positive");
    // Exact projected engines converge at any span; the general enumeration
    // engine only equilibrates short spans at zero drift, so stay shallow.
    const bool exact_engine = projection_measurable(spec, 1.0);
    const int Lmax = exact_engine ? 6 : 2;
    const int L_lo = Lmax >= 4 ? 2 : 1;
    BetaCBracket out;
    out.Lmax = Lmax;

    // certified upper end: m(0, beta) >= phi_beta(1)
    double beta_hi = 1e-3;
    while (phi(spec, beta_hi, 1.0) < h_target) {
        beta_hi *= 2.0;
        if (beta_hi > 1e9)
            throw std::domain_error("solve_beta_c: phi bounded below the target");
    }
    out.beta_hi = beta_hi;

    auto series_at = [&](double drift, double beta) {
        WalkConfig c{cfg.d, drift};
        return bridge_span_series(c, spec, beta, Lmax,
                                  std::numeric_limits<double>::infinity(), budget);
    };
    // certified lower end: min_L -log(truncated B(L))/L < target
    auto mass_upper_bound = [&](double beta) {
        BridgeSeries bs = series_at(0.0, beta);
        double u = std::numeric_limits<double>::infinity();
        for (int L = 1; L <= Lmax; ++L)
            u = std::min(u, -std::log(bs.series.bridge(L)) / L);
        return u;
    };
    double beta_lo = beta_hi / 2.0;
    int guard = 0;
    while (mass_upper_bound(beta_lo) >= h_target) {
        beta_lo /= 2.0;
        if (++guard > 60)
            throw std::domain_error("solve_beta_c: no certified lower bracket");
    }
    out.beta_lo = beta_lo;

    auto central_mass = [&](double drift, double beta) {
        BridgeSeries bs = series_at(drift, beta);
        std::vector<double> bp, tails;
        for (int L = L_lo; L <= Lmax; ++L) {
            bp.push_back(bs.series.bridge(L));
            tails.push_back(bs.series.tail);
        }
        return estimate_mass(bp, tails, L_lo, MassMethod::SlopeFit).m_hat;
    };
    double lo = beta_lo, hi = beta_hi;
    for (int i = 0; i < 40 && hi - lo > 1e-6 * (1.0 + hi); ++i) {
        double mid = 0.5 * (lo + hi);
        (central_mass(0.0, mid) < h_target ? lo : hi) = mid;
    }
    out.beta_c_heuristic = 0.5 * (lo + hi);

    // small-drift cross-check: quadratic extrapolation of m(h', beta) to h' = 0
    auto extrapolated_mass = [&](double beta) {
        const double hs[3] = {0.2, 0.1, 0.05};
        double m[3];
        for (int i = 0; i < 3; ++i) m[i] = central_mass(hs[i], beta);
        // Lagrange value at 0
        double x0 = hs[0], x1 = hs[1], x2 = hs[2];
        return m[0] * (0 - x1) * (0 - x2) / ((x0 - x1) * (x0 - x2)) +
               m[1] * (0 - x0) * (0 - x2) / ((x1 - x0) * (x1 - x2)) +
               m[2] * (0 - x0) * (0 - x1) / ((x2 - x0) * (x2 - x1));
    };
    double b = out.beta_c_heuristic;
    double f = extrapolated_mass(b) - h_target;
    double b2 = b * (f > 0 ? 0.95 : 1.05);
    double f2 = extrapolated_mass(b2) - h_target;
    for (int i = 0; i < 8 && std::abs(f2) > 1e-7 && f2 != f; ++i) {
        double bn = b2 - f2 * (b2 - b) / (f2 - f);
        bn = std::clamp(bn, beta_lo, beta_hi);
        b = b2;
        f = f2;
        b2 = bn;
        f2 = extrapolated_mass(b2) - h_target;
    }
    out.beta_c_richardson = b2;
    out.disagreement = std::abs(out.beta_c_richardson - out.beta_c_heuristic);
    return out;
}

KConstant k_constant(const WalkConfig& cfg, const PotentialSpec& spec,
                     double beta, int N_max, double budget) {
    StepLaw law = step_law(cfg);
    KConstant out;
    double sum = 0.0;
    double m_up = std::numeric_limits<double>::infinity();
    double b_min = 1.0;
    for (int n = 0; n <= N_max; ++n) {
        double p0 = proj_occupation(law, n)[static_cast<std::size_t>(n)];
        double Bn = n == 0 ? 1.0 : exact_B(cfg, spec, beta, n, budget);
        if (n >= 1) m_up = std::min(m_up, -std::log(Bn) / n);
        b_min = std::min(b_min, Bn);
        out.terms.push_back(p0 / Bn);
        sum += p0 / Bn;
    }
    double r = std::exp(-(law.lambda - m_up));
    if (!(r < 1.0))
        throw std::domain_error(
            "k_constant: geometric certificate fails (mass estimate >= lambda_h)");
    // For n > N_max: P_h[S1(n)=0] <= e^{-lambda n}, and supermultiplicativity
    // gives B(n) >= B(n*)^q B(s) >= e^{-m_up n} b_min (n = q n* + s at the
    // ratio-minimizing n*), so term_n <= e^{-(lambda-m_up) n} / b_min.
    out.tail = std::pow(r, N_max + 1) / ((1.0 - r) * b_min);
    out.value = sum * sum;
    out.upper = (sum + out.tail) * (sum + out.tail);
    return out;
}

} // namespace rwrp
