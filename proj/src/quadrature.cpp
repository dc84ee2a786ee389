#include "bqs/quadrature.hpp"

#include <algorithm>

namespace bqs {

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth, bool& ok) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) {
        ok = false;
        return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth, bool* ok) {
    if (a == b) return 0.0;
    bool good = true;
    const double fa = f(a), fb = f(b);
    // Start from a few panels so that narrow features are not missed.
    const int panels = 8;
    double sum = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h, x1 = (i + 1 == panels) ? b : a + (i + 1) * h;
        const double f0 = (i == 0) ? fa : f(x0);
        const double f1 = (i + 1 == panels) ? fb : f(x1);
        const double fmid = f(0.5 * (x0 + x1));
        const double w = (x1 - x0) / 6.0 * (f0 + 4.0 * fmid + f1);
        sum += simpson_rec(f, x0, x1, f0, fmid, f1, w, abs_tol / panels, max_depth, good);
    }
    if (ok) *ok = *ok && good;
    return sum;
}

double adaptive_simpson_pieces(const std::function<double(double)>& f, std::vector<double> breaks,
                               double abs_tol, int max_depth, bool* ok) {
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    if (breaks.size() < 2) return 0.0;
    const double total = breaks.back() - breaks.front();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double len = breaks[i + 1] - breaks[i];
        if (len <= 0.0) continue;
        sum += adaptive_simpson(f, breaks[i], breaks[i + 1], abs_tol * len / total, max_depth, ok);
    }
    return sum;
}

namespace {

// 15-point Kronrod nodes on [0, 1] (symmetric) with 7-point Gauss embedded.
constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

void gk15(const std::function<std::complex<double>(double)>& f, double a, double b,
          std::complex<double>& kron, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const std::complex<double> fc = f(c);
    std::complex<double> rk = fc * wgk[7];
    std::complex<double> rg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const std::complex<double> f1 = f(c - dx), f2 = f(c + dx);
        rk += wgk[j] * (f1 + f2);
        if (j % 2 == 1) rg += wg[j / 2] * (f1 + f2);
    }
    kron = rk * h;
    err = std::abs((rk - rg) * h);
}

void gk_rec(const std::function<std::complex<double>(double)>& f, double a, double b,
            double tol, int depth, GkResult& acc) {
    std::complex<double> v;
    double e;
    gk15(f, a, b, v, e);
    if (e <= tol || depth <= 0) {
        if (e > tol) acc.converged = false;
        acc.value += v;
        acc.error += e;
        return;
    }
    const double m = 0.5 * (a + b);
    gk_rec(f, a, m, 0.5 * tol, depth - 1, acc);
    gk_rec(f, m, b, 0.5 * tol, depth - 1, acc);
}

}  // namespace

GkResult gauss_kronrod(const std::function<std::complex<double>(double)>& f, double a, double b,
                       double abs_tol, int max_depth) {
    GkResult r;
    r.value = 0.0;
    if (a == b) return r;
    gk_rec(f, a, b, abs_tol, max_depth, r);
    return r;
}

}  // namespace bqs
