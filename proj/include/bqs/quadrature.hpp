#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace bqs {

// Adaptive Simpson with Richardson correction. Returns the integral of f on
// [a, b]; sets *ok = false when max_depth is exhausted somewhere.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 50, bool* ok = nullptr);

// Same on a list of breakpoints: integrates piece by piece, splitting the
// tolerance in proportion to the piece length.
double adaptive_simpson_pieces(const std::function<double(double)>& f,
                               std::vector<double> breaks, double abs_tol,
                               int max_depth = 50, bool* ok = nullptr);

// Adaptive Gauss-Kronrod 7/15 for complex integrands.
struct GkResult {
    std::complex<double> value;
    double error = 0.0;
    bool converged = true;
};

GkResult gauss_kronrod(const std::function<std::complex<double>(double)>& f, double a,
                       double b, double abs_tol, int max_depth = 40);

}  // namespace bqs
