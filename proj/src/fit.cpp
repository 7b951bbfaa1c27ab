#include "rwrp/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace rwrp {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");

    LineFit f;
    f.n = static_cast<int>(n);
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
        f.max_abs_residual = std::max(f.max_abs_residual, std::fabs(r));
    }
    if (n > 2) {
        const double var = ss_res / static_cast<double>(n - 2);
        f.slope_stderr = std::sqrt(var / sxx);
    }
    return f;
}

double kendall_tau(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 2) throw std::invalid_argument("kendall_tau: need >= 2 points");
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (y[j] > y[i]) ++concordant;
            else if (y[j] < y[i]) ++discordant;
            // ties contribute to neither
        }
    const double denom = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return static_cast<double>(concordant - discordant) / denom;
}

MeanErr mean_err(const std::vector<double>& v) {
    MeanErr m;
    m.n = v.size();
    if (m.n == 0) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(m.n);
    if (m.n > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.stderr_ = std::sqrt(ss / (static_cast<double>(m.n - 1) * static_cast<double>(m.n)));
    }
    return m;
}

} // namespace rwrp
