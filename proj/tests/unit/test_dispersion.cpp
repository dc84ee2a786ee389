#include <doctest.h>

#include <cmath>

#include "bqs/dispersion.hpp"
#include "bqs/errors.hpp"

using namespace bqs;

namespace {

// Composite Simpson of e^{i t Phi} ring(2^{-j}|l| xi) on both half-lines.
cplx simpson_integral(const PhaseContext& ctx, int j, int n) {
    const double scale = std::ldexp(1.0, j) / std::abs(ctx.l);
    const double a = 0.75 * scale, b = 2.0 * scale, h = (b - a) / n;
    cplx total = 0.0;
    for (double sgn : {-1.0, 1.0})
        for (int i = 0; i <= n; ++i) {
            const double x = sgn * (a + i * h);
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            total += w * std::exp(cplx(0.0, ctx.t * phase(x, ctx))) * lp_ring(std::abs(x) / scale);
        }
    return total * h / 3.0;
}

Field2D sample_field() {
    Field2D f = Field2D::zeros(16, 4, 20.0);
    f.data[f.index(1, 1)] = {0.4, -0.1};
    f.data[f.index(15, 1)] = {0.2, 0.3};
    f.data[f.index(3, 3)] = {-0.5, 0.05};
    f.data[f.index(0, 2)] = {0.1, 0.1};
    return f;
}

}  // namespace

TEST_CASE("phase second derivative matches finite differences") {
    const PhysParams p = PhysParams::make(0.0, 1.0, 2.0);
    const PhaseContext ctx = PhaseContext::make(0.7, 2, 3.0, p);
    for (double xi : {-2.0, -0.4, 0.0, 0.3, 1.1, 5.0}) {
        const double h = 1e-4;
        const double fd = (phase(xi + h, ctx) - 2 * phase(xi, ctx) + phase(xi - h, ctx)) / (h * h);
        CHECK(phase_dd(xi, ctx) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("phase constants") {
    const PhysParams deg = PhysParams::make(0.0, std::sqrt(2.0), 2.0);   // B = alpha^2
    const PhaseContext c0 = PhaseContext::make(0.0, 1, 1.0, deg);
    for (double xi : {-1.0, 0.0, 0.5, 3.0}) CHECK(std::abs(phase_dd(xi, c0)) <= 1e-14);   // sqrt(2)^2 != 2
    CHECK(c0.mu() == doctest::Approx(1.0));
    CHECK(c0.xi0() == doctest::Approx(std::sqrt(1.0 / 3.0)));

    const PhaseContext above = PhaseContext::make(0.0, 1, 1.0, PhysParams::make(0.0, 1.0, 2.0));
    const PhaseContext below = PhaseContext::make(0.0, 1, 1.0, PhysParams::make(0.0, 2.0, 2.0));
    CHECK(phase_dd(0.0, above) > 0.0);
    CHECK(phase_dd(0.0, below) < 0.0);
    CHECK_THROWS_AS(PhaseContext::make(0.0, 0, 1.0, deg), InvalidParams);
}

TEST_CASE("Littlewood-Paley profiles") {
    for (double x : {0.0, 0.5, 1.0, 1.5, -1.5}) CHECK(lp_bump(x) == 1.0);
    for (double x : {2.0, 2.5, -3.0}) CHECK(lp_bump(x) == 0.0);
    double prev = 1.0;
    for (double x = 1.5; x <= 2.0; x += 0.01) {
        CHECK(lp_bump(x) <= prev + 1e-15);
        prev = lp_bump(x);
    }
    for (double x : {0.0, 0.5, 0.74, 2.0, 3.0}) CHECK(lp_ring(x) == 0.0);
    // telescoping sum of rings recovers the bump
    for (double x : {0.8, 1.0, 3.7, 50.0}) {
        double s = 0.0;
        for (int j = -12; j <= 12; ++j) s += lp_ring(std::ldexp(x, -j));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("oscillatory integral against brute-force Simpson") {
    const PhysParams p = PhysParams::make(0.0, 1.0, 2.0);
    for (int j : {-1, 0, 2}) {
        const PhaseContext ctx = PhaseContext::make(0.3, 1, 3.0, p);
        const cplx ref = simpson_integral(ctx, j, 200000);
        CHECK(std::abs(oscillatory_integral(ctx, j) - ref) <= 1e-8);
    }
    // small t: the integral tends to the area under the ring
    const PhaseContext tiny = PhaseContext::make(0.0, 2, 1e-7, p);
    const cplx near0 = oscillatory_integral(tiny, 1);
    const double area = std::abs(simpson_integral(tiny, 1, 20000));
    CHECK(std::abs(near0) == doctest::Approx(area).epsilon(1e-6));
    CHECK_THROWS_AS(oscillatory_integral(PhaseContext::make(0.0, 1, 2e3, p), 0), InvalidParams);
}

TEST_CASE("degenerate phase gives no decay") {
    const PhysParams deg = PhysParams::make(0.0, std::sqrt(2.0), 2.0);
    const double a = std::abs(oscillatory_integral(PhaseContext::make(0.0, 1, 100.0, deg), 0));
    const double b = std::abs(oscillatory_integral(PhaseContext::make(0.0, 1, 200.0, deg), 0));
    CHECK(a / b == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("zero-mode semigroup") {
    const PhysParams p = PhysParams::make(0.0, 1.0, 2.0);
    const Field2D f = sample_field();
    const Field2D same = semigroup_apply(f, 0.0, p);
    for (std::size_t i = 0; i < f.data.size(); ++i) CHECK(std::abs(same.data[i] - f.data[i]) == 0.0);

    const Field2D g = semigroup_apply(f, 3.7, p);
    for (std::size_t i = 0; i < f.data.size(); ++i) CHECK(std::abs(std::abs(g.data[i]) - std::abs(f.data[i])) <= 1e-14);

    const PhysParams pv = PhysParams::make(0.05, 1.0, 2.0);
    const Field2D ab = semigroup_apply(semigroup_apply(f, 1.2, pv), 0.9, pv);
    const Field2D c = semigroup_apply(f, 2.1, pv);
    for (std::size_t i = 0; i < f.data.size(); ++i) CHECK(std::abs(ab.data[i] - c.data[i]) <= 1e-14);

    Field2D bad = f;
    bad.data[bad.index(2, 0)] = 1.0;
    CHECK_THROWS_AS(semigroup_apply(bad, 1.0, p), NonzeroMeanInZ);
}

TEST_CASE("sup_norm of simple fields") {
    Field2D f = Field2D::zeros(16, 4, 20.0);
    f.data[f.index(1, 1)] = {0.3, 0.4};
    CHECK(sup_norm(f, 4) == doctest::Approx(0.5).epsilon(1e-12));
    f.data[f.index(3, 1)] = 0.25;
    f.data[f.index(1, 1)] = 0.5;
    CHECK(sup_norm(f, 4) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("decay_fit examples") {
    std::vector<std::pair<double, double>> a, b;
    for (int i = 0; i < 20; ++i) {
        const double t = 5.0 * std::pow(10.0, i / 19.0);
        a.emplace_back(t, std::pow(t, -1.0 / 3.0));
        b.emplace_back(t, 5.0 * std::pow(t, -0.5));
    }
    const DecayFit fa = decay_fit(a, {5.0, 50.0});
    CHECK(std::abs(fa.exponent + 1.0 / 3.0) <= 1e-10);
    const DecayFit fb = decay_fit(b, {5.0, 50.0});
    CHECK(fb.exponent == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(fb.constant == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    CHECK(fb.r2 == doctest::Approx(1.0));

    std::vector<std::pair<double, double>> few(a.begin(), a.begin() + 5);
    CHECK_THROWS_AS(decay_fit(few, {0.0, 100.0}), InsufficientSamples);
    auto neg = a;
    neg[3].second = 0.0;
    CHECK_THROWS_AS(decay_fit(neg, {0.0, 100.0}), InsufficientSamples);
}

TEST_CASE("Gaussian data is normalised and the q = 0 series is flagged") {
    // analytic W^{3,1} norm of exp(-y^2/(2 s^2)) e^{iz}: sum over i + j <= 3 of
    // 2 pi ||g^{(i)}||_{L^1}, with the Hermite-type derivatives written out
    const double sg = 0.85;
    const Field2D g = gaussian_data(512, 4, 60.0, sg, 1);
    auto deriv = [&](int i, double y) {
        const double e = std::exp(-y * y / (2 * sg * sg)), s2 = sg * sg;
        switch (i) {
            case 0: return e;
            case 1: return -y / s2 * e;
            case 2: return (y * y / (s2 * s2) - 1 / s2) * e;
            default: return (-y * y * y / (s2 * s2 * s2) + 3 * y / (s2 * s2)) * e;
        }
    };
    double W = 0.0;
    for (int i = 0; i <= 3; ++i) {
        double l1 = 0.0;
        const int n = 200000;
        const double h = 24.0 / n;
        for (int k = 0; k <= n; ++k) l1 += (k == 0 || k == n ? 0.5 : 1.0) * std::abs(deriv(i, -12.0 + k * h)) * h;
        W += (4 - i) * 2 * 3.14159265358979323846 * l1;   // j = 0..3-i, |l|^j = 1
    }
    // the library sums on the grid, so |g'''| kinks cost O(dy^2)
    const double e512 = std::abs(sup_norm(g, 4) * W - 1.0);
    const double e1024 = std::abs(sup_norm(gaussian_data(1024, 4, 60.0, sg, 1), 4) * W - 1.0);
    CHECK(e512 <= 2e-3);
    CHECK(e1024 <= e512 / 3);
    std::vector<double> ts;
    for (int i = 0; i < 10; ++i) ts.push_back(5.0 + 5.0 * i);
    const auto s = dispersive_decay(PhysParams::make(0.0, std::sqrt(2.0), 2.0), g, ts, {5.0, 50.0});
    CHECK(s.degenerate);
}
