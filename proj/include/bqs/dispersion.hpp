#pragma once

#include <utility>
#include <vector>

#include "bqs/frame_symbols.hpp"

namespace bqs {

struct PhaseContext {
    double y = 0.0;
    int l = 1;
    double t = 1.0;
    PhysParams params;

    static PhaseContext make(double y, int l, double t, const PhysParams& p);
    double mu() const;    // B / alpha^2
    double xi0() const;   // inflection point of the phase, <= 1/sqrt(2)
};

double phase(double xi, const PhaseContext& ctx);
double phase_dd(double xi, const PhaseContext& ctx);

// Smooth bump: 1 on [-3/2, 3/2], 0 outside (-2, 2), C-infinity in between.
double lp_bump(double x);
// Ring profile bump(x) - bump(2x), supported in 3/4 <= |x| <= 2.
double lp_ring(double x);
// Real-valued threshold log2(xi0 |l| / 4); rings j in [j0, j0 + 4] are resonant.
double resonant_j0(const PhaseContext& ctx);

constexpr double kMaxOscillatoryTime = 1e3;

// int e^{i t Phi(xi)} lp_ring(2^{-j} |l| xi) d xi over both half-lines.
cplx oscillatory_integral(const PhaseContext& ctx, int ring_j, double abs_tol = 1e-9);

// Spectral field over (eta, l) for one fixed k, FFT-ordered.
struct Field2D {
    int ny = 0;
    int nz = 0;
    double Ly = 0.0;
    std::vector<cplx> data;

    static Field2D zeros(int ny, int nz, double Ly);
    std::size_t index(int in, int il) const { return std::size_t(in) * nz + il; }
    double eta_of(int in) const;
    int l_of(int il) const { return Lattice::mode(il, nz); }
};

// Multiplies every slot by e^{-nu(eta^2+l^2)t - i t sqrt((B l^2 + alpha^2 eta^2)/(l^2+eta^2))}.
Field2D semigroup_apply(const Field2D& field, double t, const PhysParams& p);

// max |f(y, z)| over a grid refined `pad` times by zero padding.
double sup_norm(const Field2D& field, int pad = 4);

struct DecayFit {
    double exponent = 0.0;
    double constant = 0.0;   // intercept of log v against log t
    double r2 = 0.0;
    int samples = 0;
    double t_lo = 0.0;
    double t_hi = 0.0;
};

DecayFit decay_fit(const std::vector<std::pair<double, double>>& series,
                   std::pair<double, double> window);

// Single-l Gaussian f(y) e^{i l z} with f = exp(-y^2 / (2 sigma^2)), scaled to
// unit W^{3,1}(R x T) norm.
Field2D gaussian_data(int ny, int nz, double Ly, double sigma, int l);
double w31_norm(const Field2D& field);

struct DispersiveSeries {
    std::vector<std::pair<double, double>> series;   // (t, sup-norm)
    DecayFit fit;
    bool degenerate = false;   // q == 0 within 1e-12
};

DispersiveSeries dispersive_decay(const PhysParams& p, const Field2D& data,
                                  const std::vector<double>& times, std::pair<double, double> window,
                                  int pad = 4);

}  // namespace bqs
