#pragma once

#include <complex>
#include <vector>

namespace bqs {

// Thin owners of FFTW plans. Forward transforms carry the 1/N normalisation
// so that spectral arrays hold Fourier coefficients; backward transforms are
// plain sums.
class Fft1D {
public:
    explicit Fft1D(int n);
    ~Fft1D();
    Fft1D(const Fft1D&) = delete;
    Fft1D& operator=(const Fft1D&) = delete;

    int size() const { return n_; }
    void forward(const std::complex<double>* in, std::complex<double>* out);
    void backward(const std::complex<double>* in, std::complex<double>* out);

private:
    int n_;
    std::complex<double>* buf_;
    void* fwd_;
    void* bwd_;
};

// Real 3-D transforms on an nx x ny x nz box. Spectral data is exchanged in
// the full (Hermitian) layout used by Lattice; only the non-negative l half
// is touched by the library.
class Fft3DReal {
public:
    Fft3DReal(int nx, int ny, int nz);
    ~Fft3DReal();
    Fft3DReal(const Fft3DReal&) = delete;
    Fft3DReal& operator=(const Fft3DReal&) = delete;

    std::size_t real_size() const { return std::size_t(nx_) * ny_ * nz_; }

    // full spectrum -> physical values (Hermitian part implied)
    void to_physical(const std::complex<double>* spec, double* phys);
    // physical values -> full spectrum (negative l filled by symmetry)
    void to_spectral(const double* phys, std::complex<double>* spec);

private:
    int nx_, ny_, nz_, nzh_;
    double* rbuf_;
    std::complex<double>* cbuf_;
    void* r2c_;
    void* c2r_;
};

}  // namespace bqs
