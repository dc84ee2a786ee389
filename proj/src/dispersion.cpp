#include "bqs/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bqs/errors.hpp"
#include "bqs/fft.hpp"
#include "bqs/quadrature.hpp"

namespace bqs {

namespace {

constexpr double kPi = 3.14159265358979323846;

double smooth_step(double x) {
    // 0 for x <= 0, 1 for x >= 1
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

}  // namespace

PhaseContext PhaseContext::make(double y, int l, double t, const PhysParams& p) {
    if (l == 0) throw InvalidParams("PhaseContext needs l != 0");
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidParams("PhaseContext needs t > 0");
    if (!std::isfinite(y)) throw InvalidParams("PhaseContext: y not finite");
    return {y, l, t, p};
}

double PhaseContext::mu() const {
    if (!(params.alpha > 0.0)) throw InvalidParams("mu = B/alpha^2 needs alpha > 0");
    return params.b_beta() / (params.alpha * params.alpha);
}

double PhaseContext::xi0() const {
    const double m = mu();
    if (m < 0.0) throw InvalidParams("xi0 defined only for mu >= 0");
    return std::sqrt((std::sqrt(m * m + 3.0 * m) - m) / 3.0);
}

double phase(double xi, const PhaseContext& ctx) {
    const double B = ctx.params.b_beta(), a2 = ctx.params.alpha * ctx.params.alpha;
    return ctx.y * ctx.l / ctx.t * xi - std::sqrt((B + a2 * xi * xi) / (1.0 + xi * xi));
}

double phase_dd(double xi, const PhaseContext& ctx) {
    const double B = ctx.params.b_beta(), a2 = ctx.params.alpha * ctx.params.alpha;
    const double d = B - a2;
    if (d == 0.0) return 0.0;
    const double x2 = xi * xi;
    const double num = -3.0 * a2 * x2 * x2 - 2.0 * B * x2 + B;
    const double den = std::pow(1.0 + x2, 2.5) * std::pow(B + a2 * x2, 1.5);
    return d * num / den;
}

double lp_bump(double x) {
    const double a = std::abs(x);
    if (a <= 1.5) return 1.0;
    if (a >= 2.0) return 0.0;
    return smooth_step((2.0 - a) / 0.5);
}

double lp_ring(double x) { return lp_bump(x) - lp_bump(2.0 * x); }

double resonant_j0(const PhaseContext& ctx) {
    const double x0 = ctx.xi0();
    if (!(x0 > 0.0)) throw InvalidParams("resonant_j0 needs xi0 > 0");
    return std::log2(x0 * std::abs(ctx.l) / 4.0);
}

cplx oscillatory_integral(const PhaseContext& ctx, int ring_j, double abs_tol) {
    if (!(ctx.t > 0.0)) throw InvalidParams("oscillatory_integral needs t > 0");
    if (ctx.t > kMaxOscillatoryTime)
        throw InvalidParams("oscillatory_integral: t above the 1e3 cap");
    const double scale = std::ldexp(1.0, ring_j) / std::abs(ctx.l);
    // ring edges and the plateau [1, 3/2] of lp_ring
    std::vector<double> breaks = {0.75 * scale, scale, 1.5 * scale, 2.0 * scale};
    if (ctx.params.alpha > 0.0 && ctx.params.b_beta() >= 0.0) {
        const double x0 = ctx.xi0();
        if (x0 > breaks.front() && x0 < breaks.back()) breaks.push_back(x0);
    }
    std::sort(breaks.begin(), breaks.end());

    const double lscale = std::abs(ctx.l) / std::ldexp(1.0, ring_j);
    const double total = breaks.back() - breaks.front();
    cplx sum = 0.0;
    for (int side : {1, -1}) {
        auto f = [&](double xi) {
            const double x = side * xi;
            return std::exp(cplx(0.0, ctx.t * phase(x, ctx))) * lp_ring(lscale * x);
        };
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            const double a = breaks[i], b = breaks[i + 1];
            // split so that every panel carries at most ~half an oscillation
            double tv = 0.0;
            const int probe = 256;
            double prev = ctx.t * phase(side * a, ctx);
            for (int s = 1; s <= probe; ++s) {
                const double cur = ctx.t * phase(side * (a + (b - a) * s / probe), ctx);
                tv += std::abs(cur - prev);
                prev = cur;
            }
            const int panels = std::max(1, int(std::ceil(tv / kPi)));
            const double h = (b - a) / panels;
            const double tol = 0.5 * abs_tol * (b - a) / total / panels;
            for (int s = 0; s < panels; ++s) {
                const GkResult r = gauss_kronrod(f, a + s * h, (s + 1 == panels) ? b : a + (s + 1) * h, tol);
                if (!r.converged)
                    throw QuadratureNoConvergence("oscillatory_integral: ring " + std::to_string(ring_j) +
                                                  " did not meet tolerance");
                sum += r.value;
            }
        }
    }
    return sum;
}

Field2D Field2D::zeros(int ny, int nz, double Ly) {
    if (ny <= 0 || nz <= 0 || ny % 2 || nz % 2) throw InvalidParams("Field2D needs positive even sizes");
    if (!(Ly > 0.0)) throw InvalidParams("Field2D needs Ly > 0");
    return {ny, nz, Ly, std::vector<cplx>(std::size_t(ny) * nz, cplx(0.0))};
}

double Field2D::eta_of(int in) const { return 2.0 * kPi / Ly * Lattice::mode(in, ny); }

Field2D semigroup_apply(const Field2D& field, double t, const PhysParams& p) {
    double mean = 0.0;
    for (int in = 0; in < field.ny; ++in) mean = std::max(mean, std::abs(field.data[field.index(in, 0)]));
    if (mean > 1e-12) throw NonzeroMeanInZ("semigroup_apply: l = 0 slice has size " + std::to_string(mean));
    Field2D out = field;
    const double B = p.b_beta(), a2 = p.alpha * p.alpha;
    for (int in = 0; in < field.ny; ++in) {
        const double eta = field.eta_of(in);
        for (int il = 0; il < field.nz; ++il) {
            const int l = field.l_of(il);
            if (l == 0) {
                out.data[field.index(in, il)] = 0.0;
                continue;
            }
            const double p2 = eta * eta + double(l) * l;
            const cplx w = std::sqrt(cplx((B * l * l + a2 * eta * eta) / p2, 0.0));
            const cplx factor = std::exp(-p.nu * p2 * t - cplx(0.0, t) * w);
            out.data[field.index(in, il)] *= factor;
        }
    }
    return out;
}

double sup_norm(const Field2D& field, int pad) {
    if (pad < 1) throw InvalidParams("sup_norm needs pad >= 1");
    const int my = pad * field.ny, mz = pad * field.nz;
    // rows over y for each active l column
    std::vector<int> cols;
    for (int il = 0; il < field.nz; ++il) {
        bool any = false;
        for (int in = 0; in < field.ny && !any; ++in) any = field.data[field.index(in, il)] != cplx(0.0);
        if (any) cols.push_back(il);
    }
    if (cols.empty()) return 0.0;
    Fft1D fy(my);
    std::vector<cplx> in(my), out(my);
    std::vector<std::vector<cplx>> ycols;
    for (int il : cols) {
        std::fill(in.begin(), in.end(), cplx(0.0));
        for (int n = 0; n < field.ny; ++n) in[Lattice::slot(Lattice::mode(n, field.ny), my)] = field.data[field.index(n, il)];
        fy.backward(in.data(), out.data());
        ycols.push_back(out);
    }
    double best = 0.0;
    if (cols.size() == 1) {
        // a single z-mode has constant modulus in z
        for (const cplx& v : ycols[0]) best = std::max(best, std::abs(v));
        return best;
    }
    Fft1D fz(mz);
    std::vector<cplx> zin(mz), zout(mz);
    for (int j = 0; j < my; ++j) {
        std::fill(zin.begin(), zin.end(), cplx(0.0));
        for (std::size_t c = 0; c < cols.size(); ++c)
            zin[Lattice::slot(field.l_of(cols[c]), mz)] = ycols[c][j];
        fz.backward(zin.data(), zout.data());
        for (const cplx& v : zout) best = std::max(best, std::abs(v));
    }
    return best;
}

DecayFit decay_fit(const std::vector<std::pair<double, double>>& series,
                   std::pair<double, double> window) {
    std::vector<double> xs, ys;
    for (const auto& [t, v] : series) {
        if (t < window.first || t > window.second) continue;
        if (!(t > 0.0) || !(v > 0.0) || !std::isfinite(v))
            throw InsufficientSamples("decay_fit: non-positive sample at t = " + std::to_string(t));
        xs.push_back(std::log(t));
        ys.push_back(std::log(v));
    }
    const int n = int(xs.size());
    if (n < 8) throw InsufficientSamples("decay_fit: " + std::to_string(n) + " samples in window, need 8");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw InsufficientSamples("decay_fit: all samples at one time");
    DecayFit fit;
    fit.exponent = sxy / sxx;
    fit.constant = my - fit.exponent * mx;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.constant + fit.exponent * xs[i]);
        sse += r * r;
    }
    fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    fit.samples = n;
    fit.t_lo = window.first;
    fit.t_hi = window.second;
    return fit;
}

Field2D gaussian_data(int ny, int nz, double Ly, double sigma, int l) {
    if (!(sigma > 0.0)) throw InvalidParams("gaussian_data needs sigma > 0");
    if (l == 0 || std::abs(l) >= nz / 2) throw InvalidParams("gaussian_data needs 0 < |l| < nz/2");
    Field2D f = Field2D::zeros(ny, nz, Ly);
    std::vector<cplx> phys(ny), spec(ny);
    for (int j = 0; j < ny; ++j) {
        const double y = Ly / ny * Lattice::mode(j, ny);
        phys[j] = std::exp(-y * y / (2.0 * sigma * sigma));
    }
    Fft1D fy(ny);
    fy.forward(phys.data(), spec.data());
    const int il = Lattice::slot(l, nz);
    for (int n = 0; n < ny; ++n) f.data[f.index(n, il)] = spec[n];
    const double norm = w31_norm(f);
    for (cplx& v : f.data) v /= norm;
    return f;
}

double w31_norm(const Field2D& field) {
    // sum over |a| <= 3 of ||d_y^i d_z^j f||_{L^1(R x T)}, with the y-integral
    // taken by the trapezoid rule on the periodic grid
    Fft1D fy(field.ny);
    std::vector<cplx> spec(field.ny), phys(field.ny);
    const double dy = field.Ly / field.ny;
    double total = 0.0;
    for (int i = 0; i <= 3; ++i) {
        std::vector<std::vector<cplx>> cols(field.nz);
        for (int il = 0; il < field.nz; ++il) {
            for (int n = 0; n < field.ny; ++n)
                spec[n] = std::pow(cplx(0.0, field.eta_of(n)), i) * field.data[field.index(n, il)];
            fy.backward(spec.data(), phys.data());
            cols[il] = phys;
        }
        for (int jz = 0; jz <= 3 - i; ++jz) {
            double l1 = 0.0;
            for (int yj = 0; yj < field.ny; ++yj) {
                for (int zj = 0; zj < field.nz; ++zj) {
                    const double z = 2.0 * kPi * zj / field.nz;
                    cplx v = 0.0;
                    for (int il = 0; il < field.nz; ++il) {
                        const int l = field.l_of(il);
                        if (cols[il][yj] == cplx(0.0)) continue;
                        v += std::pow(cplx(0.0, l), jz) * cols[il][yj] * std::exp(cplx(0.0, l * z));
                    }
                    l1 += std::abs(v);
                }
            }
            total += l1 * dy * (2.0 * kPi / field.nz);
        }
    }
    return total;
}

DispersiveSeries dispersive_decay(const PhysParams& p, const Field2D& data,
                                  const std::vector<double>& times, std::pair<double, double> window,
                                  int pad) {
    DispersiveSeries out;
    for (double t : times) out.series.emplace_back(t, sup_norm(semigroup_apply(data, t, p), pad));
    out.degenerate = std::abs(p.b_beta() - p.alpha * p.alpha) < 1e-12;
    if (!out.degenerate) out.fit = decay_fit(out.series, window);
    return out;
}

}  // namespace bqs
