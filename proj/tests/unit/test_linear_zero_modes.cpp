#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <random>

#include "bqs/linear_zero_modes.hpp"

using namespace bqs;

namespace {

Eigen::Matrix3cd to_eigen(const Mat3& m) {
    Eigen::Matrix3cd e;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) e(i, j) = m[i][j];
    return e;
}

double rel_diff(const Vec3& a, const Vec3& b) {
    double d = 0.0, n = 0.0;
    for (int i = 0; i < 3; ++i) {
        d += std::norm(a[i] - b[i]);
        n += std::norm(b[i]);
    }
    return std::sqrt(d / n);
}

}  // namespace

TEST_CASE("h_dispersion examples") {
    CHECK(std::abs(h_dispersion(PhysParams::make(0.0, 1.0, 2.0), 0.0, 1) - std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(h_dispersion(PhysParams::make(0.0, 0.7, 3.0), 0.0, 0)) == 0.0);
    CHECK(std::abs(h_dispersion(PhysParams::make(0.0, 2.0, -1.0), 1.0, 1) - std::sqrt(6.0)) < 1e-14);
}

TEST_CASE("eigenvalue examples") {
    const auto ev = eigenvalues(PhysParams::make(0.0, 1.0, 2.0), 1.0, 1);
    for (const auto& e : ev) CHECK(std::abs(e.real()) < 1e-14);
    CHECK(std::abs(std::abs(ev[1].imag()) - std::sqrt(1.5)) < 1e-14);
    CHECK(std::abs(std::abs(ev[2].imag()) - std::sqrt(1.5)) < 1e-14);
    for (double a : {0.3, 1.0, 2.5}) {
        const auto e2 = eigenvalues(PhysParams::make(0.1, a, 2.0), 1.0, 1);
        for (const auto& e : e2) CHECK(e.real() == doctest::Approx(-0.2));
    }
}

TEST_CASE("eigenvalues match a dense eigensolver") {
    for (const auto& p : {PhysParams::make(0.01, 1.0, 2.0), PhysParams::make(0.05, 2.0, 0.5),
                          PhysParams::make(0.0, 1.3, -1.0)})
        for (double eta : {-3.0, 0.0, 0.5, 4.0})
            for (int l : {-2, 1, 3}) {
                // near a double eigenvalue the dense solver itself loses half the digits
                if (std::abs(h_dispersion(p, eta, l)) < 1e-3) continue;
                Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(to_eigen(zero_mode_generator(p, eta, l)));
                const auto mine = eigenvalues(p, eta, l);
                for (int i = 0; i < 3; ++i) {
                    double best = 1e300;
                    for (const auto& m : mine) best = std::min(best, std::abs(m - es.eigenvalues()(i)));
                    CHECK(best <= 1e-10);
                }
            }
}

TEST_CASE("simple_zero_propagator agrees with the matrix exponential") {
    for (const auto& p : {PhysParams::make(0.01, 1.0, 2.0), PhysParams::make(0.0, 1.0, 2.0),
                          PhysParams::make(0.02, 1.5, 0.5), PhysParams::make(0.01, 0.0, 0.0)})
        for (double eta : {-5.0, -0.5, 0.0, 2.0, 7.0})
            for (int l : {-3, 1, 2})
                for (double t : {0.3, 2.0, 15.0}) {
                    const Eigen::Matrix3cd ref = (to_eigen(zero_mode_generator(p, eta, l)) * t).exp();
                    const Eigen::Matrix3cd mine = to_eigen(simple_zero_propagator(p, eta, l, t));
                    CHECK((ref - mine).norm() <= 1e-10 * std::max(1.0, ref.norm()));
                }
}

TEST_CASE("simple_zero_propagator basic properties") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const Eigen::Matrix3cd id = to_eigen(simple_zero_propagator(p, 1.5, 2, 0.0));
    CHECK((id - Eigen::Matrix3cd::Identity()).norm() < 1e-15);

    // semigroup property
    const Eigen::Matrix3cd a = to_eigen(simple_zero_propagator(p, 1.5, 2, 0.7));
    const Eigen::Matrix3cd b = to_eigen(simple_zero_propagator(p, 1.5, 2, 1.9));
    const Eigen::Matrix3cd c = to_eigen(simple_zero_propagator(p, 1.5, 2, 2.6));
    CHECK((a * b - c).norm() < 1e-12);

    // example slot against the RK4 oracle
    const Vec3 v{1.0, cplx(0.0, 1.0), 0.5};
    const Vec3 got = mat_apply(simple_zero_propagator(p, 1.0, 2, 1.0), v);
    CHECK(rel_diff(got, rk4_oracle(p, 1.0, 2, 1.0, 1e-4, v)) <= 1e-8);
}

TEST_CASE("inviscid propagator stays bounded (no lift-up growth)") {
    const PhysParams p = PhysParams::make(0.0, 1.0, 2.0);
    for (double eta : {0.0, 1.0, 6.0})
        for (int l : {1, 3}) {
            double early = 0.0, late = 0.0;
            for (int i = 0; i <= 4000; ++i) {
                const double t = 0.25 * i;
                const Mat3 m = simple_zero_propagator(p, eta, l, t);
                double mx = 0.0;
                for (const auto& row : m)
                    for (const auto& e : row) mx = std::max(mx, std::abs(e));
                (t <= 100.0 ? early : late) = std::max(t <= 100.0 ? early : late, mx);
            }
            CHECK(late <= 1.0001 * early);
        }
}

TEST_CASE("double_zero_propagator") {
    const PhysParams p0 = PhysParams::make(0.0, 1.0, 2.0);
    const double pi = 3.14159265358979323846;
    const auto q = double_zero_propagator(p0, 3.0, pi / 2, {0.0, 1.0, 0.0});
    CHECK(std::abs(q.u3) < 1e-15);
    CHECK(std::abs(q.theta - 1.0) < 1e-15);

    const PhysParams p = PhysParams::make(0.1, 1.0, 2.0);
    const auto r = double_zero_propagator(p, 2.0, 1.0, {0.0, 1.0, 0.0});
    CHECK(std::abs(r.u3 - std::exp(-0.4) * std::cos(1.0)) < 1e-14);
    CHECK(std::abs(r.theta - std::exp(-0.4) * std::sin(1.0)) < 1e-14);

    const auto u = double_zero_propagator(p, 2.0, 1.0, {1.0, 0.0, 0.0});
    CHECK(std::abs(u.u1 - std::exp(-0.4)) < 1e-14);
}

TEST_CASE("rk4_oracle is fourth order") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const Vec3 v{0.3, cplx(-0.2, 0.5), 1.0};
    const Vec3 exact = mat_apply(simple_zero_propagator(p, 2.0, 1, 4.0), v);
    const double e1 = rel_diff(rk4_oracle(p, 2.0, 1, 4.0, 0.1, v), exact);
    const double e2 = rel_diff(rk4_oracle(p, 2.0, 1, 4.0, 0.05, v), exact);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));

    // trivial generator: nothing moves
    const PhysParams z = PhysParams::make(0.0, 0.0, 0.0);
    const Vec3 w{0.0, 0.0, 1.0};
    CHECK(rel_diff(rk4_oracle(z, 0.0, 1, 3.0, 0.01, w), w) < 1e-15);
}

TEST_CASE("combined quantities") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const auto zero = combined_quantities(p, 1.5, 2, 0.0, 0.0);
    CHECK(std::abs(zero.V02) == 0.0);
    CHECK(std::abs(zero.V03) == 0.0);
    CHECK(std::abs(zero.Lambda0) == 0.0);

    // eta = 0: V02 does not see theta
    const auto a = combined_quantities(p, 0.0, 2, 1.0, 0.0);
    const auto b = combined_quantities(p, 0.0, 2, 1.0, 5.0);
    CHECK(std::abs(a.V02 - b.V02) < 1e-14);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (double eta : {-7.5, -1.0, 0.0, 0.3, 7.5})
        for (int l : {-4, -1, 2}) {
            const cplx u1(g(rng), g(rng)), th(g(rng), g(rng));
            const auto cq = combined_quantities(p, eta, l, u1, th);
            const auto [u1b, thb] = invert_combined(p, eta, l, cq);
            CHECK(std::abs(u1b - u1) < 1e-12 * std::abs(u1) + 1e-14);
            CHECK(std::abs(thb - th) < 1e-12 * std::abs(th) + 1e-14);
        }
}
