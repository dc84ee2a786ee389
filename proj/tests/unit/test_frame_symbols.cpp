#include <doctest.h>

#include <cmath>

#include "bqs/errors.hpp"
#include "bqs/frame_symbols.hpp"

using namespace bqs;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("symbol_p examples") {
    CHECK(symbol_p(0.0, {1, 0.0, 0}) == doctest::Approx(1.0));
    CHECK(symbol_p(2.0, {1, 2.0, 0}) == doctest::Approx(1.0));
    CHECK(symbol_p(3.0, {2, 1.0, 4}) == doctest::Approx(45.0));
}

TEST_CASE("symbol_ph examples") {
    CHECK(symbol_ph(0.0, {0, 0.0, 3}) == 0.0);
    CHECK(symbol_ph(1.0, {1, 1.0, 0}) == doctest::Approx(1.0));
    CHECK(symbol_ph(0.0, {3, 4.0, 0}) == doctest::Approx(25.0));
}

TEST_CASE("dt_p examples and finite differences") {
    CHECK(dt_p(0.7, {0, 3.0, 2}) == 0.0);
    CHECK(dt_p(2.5, {2, 5.0, 1}) == 0.0);
    CHECK(dt_p(1.0, {2, 5.0, 0}) == doctest::Approx(-12.0));
    const Frequency f{3, -2.5, 2};
    for (double t : {0.0, 0.4, 1.3, 7.0}) {
        const double h = 1e-4;
        const double fd = (symbol_p(t + h, f) - symbol_p(t - h, f)) / (2 * h);
        CHECK(dt_p(t, f) == doctest::Approx(fd).epsilon(1e-8));
    }
}

TEST_CASE("PhysParams validation") {
    CHECK_THROWS_AS(PhysParams::make(-1.0, 1.0, 2.0), InvalidParams);
    CHECK_THROWS_AS(PhysParams::make(0.1, -1.0, 2.0), InvalidParams);
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    CHECK(p.b_beta() == 2.0);
    CHECK(p.q() == doctest::Approx(1.0));
    CHECK(p.lambda() == doctest::Approx((2 * std::sqrt(2.0) - 1) / (2 * std::sqrt(2.0) + 1) / 16.0));
    CHECK(p.c_alpha() == doctest::Approx(std::exp(-kPi / std::sqrt(2.0))));
    CHECK_THROWS_AS(PhysParams::make(0.01, 1.0, 0.5).lambda(), InvalidParams);
}

TEST_CASE("frame_remap leaves k = 0 untouched and round-trips") {
    const Lattice lat = Lattice::make(8, 16, 4, 2 * kPi);
    SpectralField f = lat.zeros();
    f[lat.index(0, 3, 1)] = {1.0, -2.0};
    f[lat.index(0, 13, 2)] = {0.5, 0.25};
    f[lat.index(1, 2, 1)] = {0.3, 0.1};
    f[lat.index(7, 4, 3)] = {-0.2, 0.6};
    const SpectralField m = frame_remap(f, lat, 2.0, RemapDirection::LabToMoving);
    CHECK(m[lat.index(0, 3, 1)] == f[lat.index(0, 3, 1)]);
    CHECK(m[lat.index(0, 13, 2)] == f[lat.index(0, 13, 2)]);
    const SpectralField back = frame_remap(m, lat, 2.0, RemapDirection::MovingToLab);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(back[i] - f[i]));
    CHECK(err <= 1e-12);
}

TEST_CASE("frame_remap matches a direct DFT of the sheared function") {
    // lab field e^{i(k x1 + eta y)}, sampled in moving coordinates x1 = x + t y
    const Lattice lat = Lattice::make(8, 8, 2, 2 * kPi);
    const double t = lat.Ly / (2 * kPi);
    const int k = 1, n = 0;
    SpectralField lab = lat.zeros();
    lab[lat.index(Lattice::slot(k, 8), n, 0)] = 1.0;
    const SpectralField mov = frame_remap(lab, lat, t, RemapDirection::LabToMoving);

    SpectralField dft = lat.zeros();
    const int N = 8;
    for (int ik = 0; ik < N; ++ik)
        for (int in = 0; in < N; ++in) {
            std::complex<double> acc = 0.0;
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) {
                    const double x = 2 * kPi * a / N, y = lat.Ly * b / N;
                    const std::complex<double> v =
                        std::exp(std::complex<double>(0.0, k * (x + t * y) + lat.eta_of(n) * y));
                    acc += v * std::exp(std::complex<double>(0.0, -(lat.k_of(ik) * x + lat.eta_of(in) * y)));
                }
            dft[lat.index(ik, in, 0)] = acc / double(N * N);
        }
    double err = 0.0;
    for (std::size_t i = 0; i < dft.size(); ++i) err = std::max(err, std::abs(dft[i] - mov[i]));
    CHECK(err <= 1e-12);
    CHECK(std::abs(mov[lat.index(1, 1, 0)]) == doctest::Approx(1.0));
}

TEST_CASE("frame_remap rejects modes pushed out of band") {
    const Lattice lat = Lattice::make(4, 8, 2, 2 * kPi);
    SpectralField f = lat.zeros();
    f[lat.index(1, 3, 0)] = 1.0;
    CHECK_THROWS_AS(frame_remap(f, lat, 1.0, RemapDirection::LabToMoving), RemapOutOfBand);
}
