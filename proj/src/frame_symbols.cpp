#include "bqs/frame_symbols.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bqs/errors.hpp"
#include "bqs/fft.hpp"

namespace bqs {

PhysParams PhysParams::make(double nu, double alpha, double beta) {
    if (!(nu >= 0.0) || !std::isfinite(nu))
        throw InvalidParams("nu must be finite and >= 0, got " + std::to_string(nu));
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw InvalidParams("alpha must be finite and >= 0, got " + std::to_string(alpha));
    if (!std::isfinite(beta)) throw InvalidParams("beta must be finite");
    return PhysParams{nu, alpha, beta};
}

double PhysParams::q() const {
    if (alpha == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(b_beta() - alpha * alpha) / alpha;
}

double PhysParams::lambda() const {
    require_b_above_quarter("lambda");
    const double s = std::sqrt(b_beta());
    return (2.0 * s - 1.0) / (2.0 * s + 1.0) / 16.0;
}

double PhysParams::c_alpha() const {
    require_positive_b("c_alpha");
    return std::exp(-alpha * M_PI / std::sqrt(b_beta()));
}

double PhysParams::sandwich() const {
    require_positive_b("sandwich constant");
    return 0.5 / std::sqrt(b_beta());
}

void PhysParams::require_positive_b(const char* what) const {
    if (!(b_beta() > 0.0))
        throw InvalidParams(std::string(what) + " requires B_beta = beta(beta-1) > 0, got " +
                            std::to_string(b_beta()));
}

void PhysParams::require_b_above_quarter(const char* what) const {
    if (!(b_beta() > 0.25))
        throw InvalidParams(std::string(what) + " requires B_beta = beta(beta-1) > 1/4, got " +
                            std::to_string(b_beta()));
}

Lattice Lattice::make(int nx, int ny, int nz, double Ly) {
    auto even = [](int n) { return n > 0 && n % 2 == 0; };
    if (!even(nx) || !even(ny) || !even(nz))
        throw InvalidParams("lattice counts must be positive and even");
    if (!(Ly >= 2.0 * M_PI - 1e-12))
        throw InvalidParams("Ly must be >= 2*pi, got " + std::to_string(Ly));
    return Lattice{nx, ny, nz, Ly};
}

namespace {

SpectralField remap_exact(const SpectralField& in, const Lattice& lat, double t, int sign) {
    SpectralField out = lat.zeros();
    for (int ik = 0; ik < lat.nx; ++ik) {
        const int k = lat.k_of(ik);
        const double s = sign * k * t / lat.eta_unit();
        const long shift = std::lround(s);
        if (std::abs(s - double(shift)) > 1e-9 * std::max(1.0, std::abs(s)))
            throw RemapOutOfBand("time t=" + std::to_string(t) +
                                 " is not lattice-aligned for k=" + std::to_string(k));
        for (int in_ = 0; in_ < lat.ny; ++in_) {
            const long src_n = lat.n_of(in_);
            // lab (k, m) is the moving-frame mode (k, m + k t)
            const long dst_n = src_n + shift;
            for (int il = 0; il < lat.nz; ++il) {
                const cplx v = in[lat.index(ik, in_, il)];
                if (v == cplx(0.0)) continue;
                if (!lat.in_band_n(dst_n))
                    throw RemapOutOfBand("mode k=" + std::to_string(k) + " n=" +
                                         std::to_string(src_n) + " leaves the eta band");
                out[lat.index(ik, Lattice::slot(int(dst_n), lat.ny), il)] = v;
            }
        }
    }
    return out;
}

SpectralField remap_interp(const SpectralField& in, const Lattice& lat, double t, int sign) {
    SpectralField out = lat.zeros();
    Fft1D fft(lat.ny);
    std::vector<cplx> pencil(lat.ny), phys(lat.ny);
    for (int ik = 0; ik < lat.nx; ++ik) {
        const double c = sign * lat.k_of(ik) * t;
        for (int il = 0; il < lat.nz; ++il) {
            for (int in_ = 0; in_ < lat.ny; ++in_) pencil[in_] = in[lat.index(ik, in_, il)];
            fft.backward(pencil.data(), phys.data());
            for (int j = 0; j < lat.ny; ++j) {
                const double y = j * lat.Ly / lat.ny;
                phys[j] *= std::polar(1.0, c * y);
            }
            fft.forward(phys.data(), pencil.data());
            for (int in_ = 0; in_ < lat.ny; ++in_) out[lat.index(ik, in_, il)] = pencil[in_];
        }
    }
    return out;
}

}  // namespace

SpectralField frame_remap(const SpectralField& field, const Lattice& lat, double t,
                          RemapDirection dir, bool interpolate) {
    if (field.size() != lat.size()) throw InvalidParams("frame_remap: field/lattice size mismatch");
    const int sign = dir == RemapDirection::LabToMoving ? 1 : -1;
    return interpolate ? remap_interp(field, lat, t, sign) : remap_exact(field, lat, t, sign);
}

}  // namespace bqs
