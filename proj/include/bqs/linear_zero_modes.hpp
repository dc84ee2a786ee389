#pragma once

#include <array>
#include <utility>
#include <vector>

#include "bqs/frame_symbols.hpp"

namespace bqs {

using Vec3 = std::array<cplx, 3>;
using Mat3 = std::array<std::array<cplx, 3>, 3>;

// k = 0 part of the state on a (eta, l) grid, FFT-ordered like Lattice.
struct ZeroModeState {
    int ny = 0;
    int nz = 0;
    double Ly = 0.0;
    std::vector<cplx> u1, u2, u3, theta;

    static ZeroModeState zeros(int ny, int nz, double Ly);
    std::size_t index(int in, int il) const { return std::size_t(in) * nz + il; }
    double eta_of(int in) const;
    int l_of(int il) const { return Lattice::mode(il, nz); }
};

ZeroModeState extract_zero_modes(const Lattice& lat, const SpectralField& u1,
                                 const SpectralField& u2, const SpectralField& u3,
                                 const SpectralField& theta);

cplx h_dispersion(const PhysParams& p, double eta, int l);

// Spectrum of the k = 0 generator: lambda1 = -nu|eta,l|^2 and the pair
// -nu|eta,l|^2 +- i h/|eta,l|.
std::array<cplx, 3> eigenvalues(const PhysParams& p, double eta, int l);

// Generator acting on (u1, u2, theta) at k = 0, l != 0.
Mat3 zero_mode_generator(const PhysParams& p, double eta, int l);

// Fundamental matrix e^{t A}, written with cos, sin(wt)/w and (1-cos wt)/w^2
// so that it stays accurate as h -> 0 and for imaginary h.
Mat3 simple_zero_propagator(const PhysParams& p, double eta, int l, double t);

Vec3 mat_apply(const Mat3& m, const Vec3& v);
Mat3 matmul(const Mat3& a, const Mat3& b);

struct DoubleZeroState {
    cplx u1 = 0.0;
    cplx u3 = 0.0;
    cplx theta = 0.0;
};

// l = 0: u1 is heat flow, (u3, theta) rotate by alpha t under e^{-nu eta^2 t};
// u2 vanishes identically.
DoubleZeroState double_zero_propagator(const PhysParams& p, double eta, double t,
                                       const DoubleZeroState& in);

// Classical RK4 on d/dt v = A v. t/dt must be an integer.
Vec3 rk4_oracle(const PhysParams& p, double eta, int l, double t, double dt, const Vec3& init);
double oracle_dt(const PhysParams& p, double eta, int l);

struct CombinedSymbols {
    cplx g1, g2, g3, g4;   // V0^2 = g1 u1 + g2 theta, Lambda0 = g3 u1 + g4 theta
    cplx g1p, g2p;         // V0^3 = g1p u1 + g2p theta
    double omega = 0.0;    // symbol of R is i omega
};

CombinedSymbols combined_symbols(const PhysParams& p, double eta, int l);

struct CombinedQuantities {
    cplx V02 = 0.0;
    cplx V03 = 0.0;
    cplx Lambda0 = 0.0;
};

CombinedQuantities combined_quantities(const PhysParams& p, double eta, int l, cplx u1,
                                       cplx theta);
std::pair<cplx, cplx> invert_combined(const PhysParams& p, double eta, int l,
                                      const CombinedQuantities& cq);

// Field-level versions over the simple-zero part of a ZeroModeState. l = 0
// slots are left at zero.
struct CombinedField {
    int ny = 0;
    int nz = 0;
    std::vector<cplx> V02, V03, Lambda0;
    double max_v03_identity_violation = 0.0;   // |V03 + (eta/l) V02| worst case
    double max_condition = 0.0;                // of [[g1, g2], [g3, g4]]
};

CombinedField combined_quantities(const ZeroModeState& s, const PhysParams& p);
void invert_combined(const CombinedField& cf, const PhysParams& p, ZeroModeState& s);

}  // namespace bqs
