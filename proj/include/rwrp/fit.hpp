#pragma once
#include <cstddef>
#include <vector>

namespace rwrp {

// golden-section minimum of a smooth unimodal f on [a, b]
template <class F>
double golden_section_min(F&& f, double a, double b, double tol = 1e-10) {
    const double gr = 0.6180339887498949;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;   // from residual variance (0 if <=2 points)
    double max_abs_residual = 0.0;
    int n = 0;
};

// ordinary least squares y = intercept + slope * x
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Kendall rank correlation of y against its index order
double kendall_tau(const std::vector<double>& y);

// mean / standard error of a sample
struct MeanErr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};
MeanErr mean_err(const std::vector<double>& v);

} // namespace rwrp
