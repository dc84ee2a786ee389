#include "bqs/linear_zero_modes.hpp"

#include <cmath>
#include <string>

#include "bqs/errors.hpp"

namespace bqs {

namespace {

void require_simple_zero(double eta, int l, const char* what) {
    if (l == 0)
        throw DegenerateFrequency(std::string(what) + " needs l != 0 (eta=" +
                                  std::to_string(eta) + ")");
}

// cos(wt), sin(wt)/w and (1 - cos wt)/w^2 for real w2 = w^2 of either sign.
struct Trig {
    double c, s, cc;
};

Trig trig(double w2, double t) {
    const double x2 = w2 * t * t;
    if (std::abs(x2) < 1e-8) {
        return {1.0 - x2 / 2.0 + x2 * x2 / 24.0,
                t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0),
                t * t * (0.5 - x2 / 24.0 + x2 * x2 / 720.0)};
    }
    if (w2 > 0.0) {
        const double w = std::sqrt(w2);
        const double sh = std::sin(0.5 * w * t);
        return {std::cos(w * t), std::sin(w * t) / w, 2.0 * sh * sh / w2};
    }
    const double w = std::sqrt(-w2);
    const double sh = std::sinh(0.5 * w * t);
    return {std::cosh(w * t), std::sinh(w * t) / w, -2.0 * sh * sh / w2};
}

}  // namespace

ZeroModeState ZeroModeState::zeros(int ny, int nz, double Ly) {
    ZeroModeState s;
    s.ny = ny;
    s.nz = nz;
    s.Ly = Ly;
    const std::size_t n = std::size_t(ny) * nz;
    s.u1.assign(n, 0.0);
    s.u2.assign(n, 0.0);
    s.u3.assign(n, 0.0);
    s.theta.assign(n, 0.0);
    return s;
}

double ZeroModeState::eta_of(int in) const {
    return 2.0 * M_PI / Ly * Lattice::mode(in, ny);
}

ZeroModeState extract_zero_modes(const Lattice& lat, const SpectralField& u1,
                                 const SpectralField& u2, const SpectralField& u3,
                                 const SpectralField& theta) {
    ZeroModeState s = ZeroModeState::zeros(lat.ny, lat.nz, lat.Ly);
    for (int in = 0; in < lat.ny; ++in)
        for (int il = 0; il < lat.nz; ++il) {
            const std::size_t g = lat.index(0, in, il);
            const std::size_t z = s.index(in, il);
            s.u1[z] = u1[g];
            s.u2[z] = u2[g];
            s.u3[z] = u3[g];
            s.theta[z] = theta[g];
        }
    return s;
}

cplx h_dispersion(const PhysParams& p, double eta, int l) {
    return std::sqrt(cplx(p.alpha * p.alpha * eta * eta + p.b_beta() * l * l, 0.0));
}

std::array<cplx, 3> eigenvalues(const PhysParams& p, double eta, int l) {
    const double p0 = eta * eta + double(l) * l;
    if (p0 == 0.0) throw DegenerateFrequency("eigenvalues at eta = l = 0");
    const cplx lam1(-p.nu * p0, 0.0);
    const cplx w = h_dispersion(p, eta, l) / std::sqrt(p0);
    const cplx I(0.0, 1.0);
    return {lam1, lam1 + I * w, lam1 - I * w};
}

Mat3 zero_mode_generator(const PhysParams& p, double eta, int l) {
    require_simple_zero(eta, l, "zero_mode_generator");
    const double p0 = eta * eta + double(l) * l;
    const double d = -p.nu * p0;
    Mat3 a{};
    a[0] = {d, p.beta - 1.0, 0.0};
    a[1] = {-p.beta * l * l / p0, d, p.alpha * eta * l / p0};
    a[2] = {0.0, -p.alpha * eta / l, d};
    return a;
}

Mat3 simple_zero_propagator(const PhysParams& p, double eta, int l, double t) {
    require_simple_zero(eta, l, "simple_zero_propagator");
    const double a = p.alpha, b = p.beta, B = p.b_beta();
    const double p0 = eta * eta + double(l) * l;
    const double w2 = (a * a * eta * eta + B * l * l) / p0;
    const Trig g = trig(w2, t);
    const double E = std::exp(-p.nu * p0 * t);
    const double el = eta * l / p0;
    Mat3 m{};
    m[0] = {E * (1.0 - B * l * l / p0 * g.cc), E * (b - 1.0) * g.s, E * a * (b - 1.0) * el * g.cc};
    m[1] = {-E * b * l * l / p0 * g.s, E * g.c, E * a * el * g.s};
    m[2] = {E * a * b * el * g.cc, -E * a * eta / l * g.s,
            E * (1.0 - a * a * eta * eta / p0 * g.cc)};
    return m;
}

Vec3 mat_apply(const Mat3& m, const Vec3& v) {
    Vec3 r{};
    for (int i = 0; i < 3; ++i) r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return r;
}

Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    return r;
}

DoubleZeroState double_zero_propagator(const PhysParams& p, double eta, double t,
                                       const DoubleZeroState& in) {
    const double E = std::exp(-p.nu * eta * eta * t);
    const double c = std::cos(p.alpha * t), s = std::sin(p.alpha * t);
    DoubleZeroState out;
    out.u1 = E * in.u1;
    out.u3 = E * (c * in.u3 - s * in.theta);
    out.theta = E * (s * in.u3 + c * in.theta);
    return out;
}

Vec3 rk4_oracle(const PhysParams& p, double eta, int l, double t, double dt, const Vec3& init) {
    if (!(dt > 0.0)) throw InvalidParams("rk4_oracle: dt must be positive");
    const double ns = t / dt;
    const long n = std::lround(ns);
    if (std::abs(ns - double(n)) > 1e-9 * std::max(1.0, ns))
        throw InvalidParams("rk4_oracle: t/dt must be an integer");
    const Mat3 a = zero_mode_generator(p, eta, l);
    Vec3 v = init;
    for (long i = 0; i < n; ++i) {
        const Vec3 k1 = mat_apply(a, v);
        Vec3 tmp;
        for (int j = 0; j < 3; ++j) tmp[j] = v[j] + 0.5 * dt * k1[j];
        const Vec3 k2 = mat_apply(a, tmp);
        for (int j = 0; j < 3; ++j) tmp[j] = v[j] + 0.5 * dt * k2[j];
        const Vec3 k3 = mat_apply(a, tmp);
        for (int j = 0; j < 3; ++j) tmp[j] = v[j] + dt * k3[j];
        const Vec3 k4 = mat_apply(a, tmp);
        for (int j = 0; j < 3; ++j) v[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return v;
}

double oracle_dt(const PhysParams& p, double eta, int l) {
    double lmax = 0.0;
    for (const cplx& z : eigenvalues(p, eta, l)) lmax = std::max(lmax, std::abs(z));
    return lmax > 0.0 ? std::min(1e-4, 0.01 / lmax) : 1e-4;
}

CombinedSymbols combined_symbols(const PhysParams& p, double eta, int l) {
    require_simple_zero(eta, l, "combined_symbols");
    p.require_positive_b("combined quantities");
    const double a = p.alpha, b = p.beta, B = p.b_beta();
    const double p0 = eta * eta + double(l) * l;
    const double w = std::sqrt((B * l * l + a * a * eta * eta) / p0);
    const cplx I(0.0, 1.0);
    CombinedSymbols g;
    g.omega = w;
    g.g1 = I * b * double(l * l) / (w * p0);
    g.g2 = -I * a * eta * double(l) / (w * p0);
    g.g1p = -I * b * eta * double(l) / (w * p0);
    g.g2p = I * a * eta * eta / (w * p0);
    // sqrt(B)/(beta-1) agrees with sqrt(beta/(beta-1)) for beta > 1 and keeps
    // Lambda0 a pure heat mode for beta < 0 as well.
    g.g3 = a * std::sqrt(B) / (b - 1.0) * eta * l / p0;
    g.g4 = std::sqrt(B) * double(l * l) / p0;
    return g;
}

CombinedQuantities combined_quantities(const PhysParams& p, double eta, int l, cplx u1,
                                       cplx theta) {
    const CombinedSymbols g = combined_symbols(p, eta, l);
    return {g.g1 * u1 + g.g2 * theta, g.g1p * u1 + g.g2p * theta, g.g3 * u1 + g.g4 * theta};
}

namespace {

double condition2(cplx a, cplx b, cplx c, cplx d) {
    // singular values of [[a, b], [c, d]]
    const double fro2 = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    const double det = std::abs(a * d - b * c);
    const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    const double smax2 = 0.5 * (fro2 + disc);
    const double smin2 = smax2 > 0.0 ? det * det / smax2 : 0.0;
    if (smin2 <= 0.0) return INFINITY;
    return std::sqrt(smax2 / smin2);
}

}  // namespace

std::pair<cplx, cplx> invert_combined(const PhysParams& p, double eta, int l,
                                      const CombinedQuantities& cq) {
    const CombinedSymbols g = combined_symbols(p, eta, l);
    const double cond = condition2(g.g1, g.g2, g.g3, g.g4);
    if (!(cond <= 1e12))
        throw SingularSymbol("symbol matrix condition " + std::to_string(cond) + " at eta=" +
                             std::to_string(eta) + " l=" + std::to_string(l));
    const cplx det = g.g1 * g.g4 - g.g2 * g.g3;
    const cplx u1 = (g.g4 * cq.V02 - g.g2 * cq.Lambda0) / det;
    const cplx th = (-g.g3 * cq.V02 + g.g1 * cq.Lambda0) / det;
    return {u1, th};
}

CombinedField combined_quantities(const ZeroModeState& s, const PhysParams& p) {
    CombinedField cf;
    cf.ny = s.ny;
    cf.nz = s.nz;
    const std::size_t n = std::size_t(s.ny) * s.nz;
    cf.V02.assign(n, 0.0);
    cf.V03.assign(n, 0.0);
    cf.Lambda0.assign(n, 0.0);
    for (int in = 0; in < s.ny; ++in)
        for (int il = 0; il < s.nz; ++il) {
            const int l = s.l_of(il);
            if (l == 0) continue;
            const double eta = s.eta_of(in);
            const CombinedSymbols g = combined_symbols(p, eta, l);
            const std::size_t i = s.index(in, il);
            cf.V02[i] = g.g1 * s.u1[i] + g.g2 * s.theta[i];
            cf.V03[i] = g.g1p * s.u1[i] + g.g2p * s.theta[i];
            cf.Lambda0[i] = g.g3 * s.u1[i] + g.g4 * s.theta[i];
            const double viol = std::abs(cf.V03[i] + eta / l * cf.V02[i]);
            cf.max_v03_identity_violation = std::max(cf.max_v03_identity_violation, viol);
            const double cond = condition2(g.g1, g.g2, g.g3, g.g4);
            cf.max_condition = std::max(cf.max_condition, cond);
            if (!(cond <= 1e12))
                throw SingularSymbol("symbol matrix condition " + std::to_string(cond) +
                                     " at eta=" + std::to_string(eta) + " l=" + std::to_string(l));
        }
    return cf;
}

void invert_combined(const CombinedField& cf, const PhysParams& p, ZeroModeState& s) {
    for (int in = 0; in < s.ny; ++in)
        for (int il = 0; il < s.nz; ++il) {
            const int l = s.l_of(il);
            if (l == 0) continue;
            const std::size_t i = s.index(in, il);
            const auto [u1, th] =
                invert_combined(p, s.eta_of(in), l, {cf.V02[i], cf.V03[i], cf.Lambda0[i]});
            s.u1[i] = u1;
            s.theta[i] = th;
        }
}

}  // namespace bqs
