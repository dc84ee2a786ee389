#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace bqs {

using cplx = std::complex<double>;
using SpectralField = std::vector<cplx>;

// Viscosity, buoyancy frequency, rotation parameter and the constants derived
// from them. nu = 0 is accepted for inviscid studies; alpha = 0 only for
// control runs.
struct PhysParams {
    double nu = 0.01;
    double alpha = 1.0;
    double beta = 2.0;

    static PhysParams make(double nu, double alpha, double beta);

    double b_beta() const { return beta * (beta - 1.0); }
    double q() const;          // |B - alpha^2| / alpha, +inf when alpha = 0
    bool has_lambda() const { return b_beta() > 0.25; }
    double lambda() const;     // throws InvalidParams unless B > 1/4
    double c_alpha() const;    // throws InvalidParams unless B > 0
    // Coercivity constant 1/(2 sqrt B) of the cross term.
    double sandwich() const;

    // Bound-verification modes only make sense for B > 0.
    void require_positive_b(const char* what) const;
    void require_b_above_quarter(const char* what) const;
};

struct Frequency {
    int k = 0;
    double eta = 0.0;
    int l = 0;
};

inline double symbol_ph(double t, const Frequency& f) {
    const double e = f.eta - f.k * t;
    return double(f.k) * f.k + e * e;
}

inline double symbol_p(double t, const Frequency& f) {
    return symbol_ph(t, f) + double(f.l) * f.l;
}

inline double dt_p(double t, const Frequency& f) {
    return -2.0 * f.k * (f.eta - f.k * t);
}

// Periodic surrogate of the (k, eta, l) frequency set. Arrays are stored
// row-major over (k, eta, l) in FFT order: index i < n/2 carries mode i,
// the rest carry i - n.
struct Lattice {
    int nx = 32;
    int ny = 64;
    int nz = 32;
    double Ly = 8.0 * 3.14159265358979323846;

    static Lattice make(int nx, int ny, int nz, double Ly);

    std::size_t size() const { return std::size_t(nx) * ny * nz; }
    std::size_t index(int ik, int in, int il) const {
        return (std::size_t(ik) * ny + in) * nz + il;
    }
    static int mode(int i, int n) { return i < n / 2 ? i : i - n; }
    static int slot(int m, int n) { return m >= 0 ? m : m + n; }

    int k_of(int ik) const { return mode(ik, nx); }
    int n_of(int in) const { return mode(in, ny); }
    int l_of(int il) const { return mode(il, nz); }
    double eta_unit() const { return 2.0 * 3.14159265358979323846 / Ly; }
    double eta_of(int in) const { return eta_unit() * n_of(in); }

    Frequency frequency(int ik, int in, int il) const {
        return {k_of(ik), eta_of(in), l_of(il)};
    }
    bool in_band_n(long n) const { return n >= -ny / 2 && n < ny / 2; }

    SpectralField zeros() const { return SpectralField(size(), cplx(0.0)); }
};

enum class RemapDirection { LabToMoving, MovingToLab };

// With x = x1 - t y, the lab mode (k, eta, l) is the moving-frame mode
// (k, eta + k t, l). Lattice-aligned times give exact slot shifts; other
// times need interpolate = true (band-limited, periodic in y).
SpectralField frame_remap(const SpectralField& field, const Lattice& lat,
                          double t, RemapDirection dir,
                          bool interpolate = false);

}  // namespace bqs
