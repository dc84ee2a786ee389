#include "bqs/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace bqs {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fft1D::Fft1D(int n) : n_(n) {
    if (n <= 0) throw std::invalid_argument("Fft1D: size must be positive");
    std::lock_guard<std::mutex> lock(planner_mutex());
    buf_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
    auto* b = reinterpret_cast<fftw_complex*>(buf_);
    fwd_ = fftw_plan_dft_1d(n, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft1D::~Fft1D() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(buf_);
}

void Fft1D::forward(const std::complex<double>* in, std::complex<double>* out) {
    std::memcpy(buf_, in, sizeof(fftw_complex) * n_);
    fftw_execute(static_cast<fftw_plan>(fwd_));
    const double s = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = buf_[i] * s;
}

void Fft1D::backward(const std::complex<double>* in, std::complex<double>* out) {
    std::memcpy(buf_, in, sizeof(fftw_complex) * n_);
    fftw_execute(static_cast<fftw_plan>(bwd_));
    std::memcpy(out, buf_, sizeof(fftw_complex) * n_);
}

Fft3DReal::Fft3DReal(int nx, int ny, int nz)
    : nx_(nx), ny_(ny), nz_(nz), nzh_(nz / 2 + 1) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    rbuf_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size()));
    cbuf_ = reinterpret_cast<std::complex<double>*>(
        fftw_malloc(sizeof(fftw_complex) * std::size_t(nx) * ny * nzh_));
    auto* c = reinterpret_cast<fftw_complex*>(cbuf_);
    r2c_ = fftw_plan_dft_r2c_3d(nx, ny, nz, rbuf_, c, FFTW_ESTIMATE);
    c2r_ = fftw_plan_dft_c2r_3d(nx, ny, nz, c, rbuf_, FFTW_ESTIMATE);
}

Fft3DReal::~Fft3DReal() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
    fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
    fftw_free(rbuf_);
    fftw_free(cbuf_);
}

void Fft3DReal::to_physical(const std::complex<double>* spec, double* phys) {
    for (int i = 0; i < nx_; ++i)
        for (int j = 0; j < ny_; ++j) {
            const std::size_t src = (std::size_t(i) * ny_ + j) * nz_;
            const std::size_t dst = (std::size_t(i) * ny_ + j) * nzh_;
            std::memcpy(cbuf_ + dst, spec + src, sizeof(fftw_complex) * nzh_);
        }
    fftw_execute(static_cast<fftw_plan>(c2r_));
    std::memcpy(phys, rbuf_, sizeof(double) * real_size());
}

void Fft3DReal::to_spectral(const double* phys, std::complex<double>* spec) {
    std::memcpy(rbuf_, phys, sizeof(double) * real_size());
    fftw_execute(static_cast<fftw_plan>(r2c_));
    const double s = 1.0 / double(real_size());
    for (int i = 0; i < nx_; ++i)
        for (int j = 0; j < ny_; ++j) {
            const std::size_t row = (std::size_t(i) * ny_ + j) * nz_;
            const std::size_t half = (std::size_t(i) * ny_ + j) * nzh_;
            for (int l = 0; l < nzh_; ++l) spec[row + l] = cbuf_[half + l] * s;
        }
    // negative l from Hermitian symmetry: f(-k,-n,-l) = conj f(k,n,l)
    for (int i = 0; i < nx_; ++i) {
        const int mi = (nx_ - i) % nx_;
        for (int j = 0; j < ny_; ++j) {
            const int mj = (ny_ - j) % ny_;
            for (int l = nzh_; l < nz_; ++l) {
                const int ml = nz_ - l;
                spec[(std::size_t(i) * ny_ + j) * nz_ + l] =
                    std::conj(spec[(std::size_t(mi) * ny_ + mj) * nz_ + ml]);
            }
        }
    }
}

}  // namespace bqs
