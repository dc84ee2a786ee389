#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "bqs/errors.hpp"
#include "bqs/linear_zero_modes.hpp"
#include "bqs/simulator.hpp"

using namespace bqs;

namespace {

constexpr double kPi = 3.14159265358979323846;
using Slot = std::array<cplx, 4>;   // U1, U2, U3, Theta

// Linearised moving-frame system for one Fourier slot, transcribed from the
// physical-space equations with grad_L -> i xi and Delta_L -> -p.
Slot slot_rhs(double t, int k, double eta, int l, const PhysParams& P, const Slot& X) {
    const double xi[3] = {double(k), eta - k * t, double(l)};
    const double p = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    const cplx f[3] = {(1.0 - P.beta) * X[1], P.beta * X[0], P.alpha * X[3]};
    const cplx s = (k * (P.beta - 2.0) * X[1] - P.beta * xi[1] * X[0] - P.alpha * l * X[3]) / p;
    Slot d;
    for (int i = 0; i < 3; ++i) d[i] = -P.nu * p * X[i] - f[i] - xi[i] * s;
    d[3] = -P.nu * p * X[3] + P.alpha * X[2];
    return d;
}

Slot rk4_slot(double T, double h, int k, double eta, int l, const PhysParams& P, Slot X) {
    const int n = int(std::lround(T / h));
    auto axpy = [](const Slot& a, double c, const Slot& b) {
        Slot r;
        for (int i = 0; i < 4; ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        const Slot k1 = slot_rhs(t, k, eta, l, P, X);
        const Slot k2 = slot_rhs(t + h / 2, k, eta, l, P, axpy(X, h / 2, k1));
        const Slot k3 = slot_rhs(t + h / 2, k, eta, l, P, axpy(X, h / 2, k2));
        const Slot k4 = slot_rhs(t + h, k, eta, l, P, axpy(X, h, k3));
        for (int c = 0; c < 4; ++c) X[c] += h / 6 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    return X;
}

Slot slot_of(const FlowState& s, std::size_t i) { return {s.U1[i], s.U2[i], s.U3[i], s.Theta[i]}; }

double slot_err(const Slot& a, const Slot& b) {
    double d = 0.0, n = 0.0;
    for (int i = 0; i < 4; ++i) {
        d += std::norm(a[i] - b[i]);
        n += std::norm(b[i]);
    }
    return std::sqrt(d / n);
}

FlowState advance(FlowState s, const PhysParams& p, Dynamics d, double dt, int steps) {
    Simulator sim(s.lat, p, d);
    if (d == Dynamics::Linear) sim.set_active_from(s);
    for (int i = 0; i < steps; ++i) {
        sim.step(s, dt);
        s.t = (i + 1) * dt;
    }
    return s;
}

const Lattice kLat = Lattice::make(8, 16, 8, 4 * kPi);

}  // namespace

TEST_CASE("zero data stays zero") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const FlowState z = FlowState::zeros(kLat);
    const FlowState a = linear_step(z, 0.01, p);
    const FlowState b = nonlinear_step(z, 0.01, p);
    for (int c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < kLat.size(); ++i) {
            CHECK(a.field(c)[i] == cplx(0.0));
            CHECK(b.field(c)[i] == cplx(0.0));
        }
}

TEST_CASE("linear k != 0 slot matches the transcribed slot system") {
    const PhysParams p = PhysParams::make(0.02, 1.0, 2.0);
    const FlowState s = mode_data(kLat, {{1, 2, 1, {0.3, 0.1}, {0.2, -0.4}, {0.1, 0.2}, {0.5, 0.1}},
                                         {2, -3, -2, {-0.2, 0.3}, {0.1, 0.1}, {0.4, -0.1}, {-0.2, 0.3}}});
    const FlowState out = advance(s, p, Dynamics::Linear, 0.01, 100);
    for (auto [k, n, l] : {std::array<int, 3>{1, 2, 1}, std::array<int, 3>{2, -3, -2}}) {
        const std::size_t i = kLat.index(Lattice::slot(k, 8), Lattice::slot(n, 16), Lattice::slot(l, 8));
        const Slot ref = rk4_slot(1.0, 1e-4, k, kLat.eta_unit() * n, l, p, slot_of(s, i));
        CHECK(slot_err(slot_of(out, i), ref) <= 1e-7);
    }
}

TEST_CASE("linear k = 0 slots reproduce the zero-mode propagators") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const double eta = 2 * kLat.eta_unit();
    const cplx u2(0.5, 0.2);
    const FlowState s = mode_data(kLat, {{0, 2, 0, {0.3, -0.1}, 0.0, {0.7, 0.2}, {-0.1, 0.4}},
                                         {0, 2, 1, {0.2, 0.1}, u2, -eta * u2, {0.3, 0.0}}});
    const FlowState out = advance(s, p, Dynamics::Linear, 0.01, 100);

    const std::size_t dz = kLat.index(0, 2, 0);
    const auto ref = double_zero_propagator(p, eta, 1.0, {s.U1[dz], s.U3[dz], s.Theta[dz]});
    CHECK(std::abs(out.U1[dz] - ref.u1) <= 1e-8);
    CHECK(std::abs(out.U3[dz] - ref.u3) <= 1e-8);
    CHECK(std::abs(out.Theta[dz] - ref.theta) <= 1e-8);
    CHECK(std::abs(out.U2[dz]) == 0.0);

    const std::size_t sz = kLat.index(0, 2, 1);
    const Vec3 v = mat_apply(simple_zero_propagator(p, eta, 1, 1.0), Vec3{s.U1[sz], s.U2[sz], s.Theta[sz]});
    CHECK(std::abs(out.U1[sz] - v[0]) <= 1e-8);
    CHECK(std::abs(out.U2[sz] - v[1]) <= 1e-8);
    CHECK(std::abs(out.Theta[sz] - v[2]) <= 1e-8);
}

TEST_CASE("a single divergence-free mode has no nonlinear self-interaction") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const FlowState s = mode_data(kLat, {{1, 2, 1, {0.3, 0.1}, {0.2, -0.4}, {0.1, 0.2}, {0.5, 0.1}}});
    // Runge-Kutta stages are only divergence-free up to the step error, so the
    // gap is small and shrinks with dt rather than vanishing
    auto gap = [&](double dt, int n) {
        const FlowState a = advance(s, p, Dynamics::Linear, dt, n);
        const FlowState b = advance(s, p, Dynamics::Nonlinear, dt, n);
        double err = 0.0;
        for (int c = 0; c < 4; ++c)
            for (std::size_t i = 0; i < kLat.size(); ++i) err = std::max(err, std::abs(a.field(c)[i] - b.field(c)[i]));
        return err;
    };
    const double coarse = gap(0.01, 20), fine = gap(0.005, 40);
    MESSAGE("gap ", coarse, " -> ", fine);
    CHECK(coarse <= 1e-10);
    CHECK(fine <= coarse / 4);
}

TEST_CASE("nonlinear steps keep the state divergence-free and real") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    const FlowState s = random_flow(kLat, 0.5, 42);
    CHECK(divergence_residual(s) <= 1e-14);
    CHECK(reality_defect(s) <= 1e-15);
    const FlowState out = advance(s, p, Dynamics::Nonlinear, 0.01, 10);
    CHECK(divergence_residual(out) <= 1e-12);
    CHECK(reality_defect(out) <= 1e-12);
}

TEST_CASE("CFL violation is reported") {
    const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
    FlowState s = random_flow(kLat, 50.0, 1);
    Simulator sim(kLat, p, Dynamics::Nonlinear);
    CHECK_THROWS_AS(sim.step(s, 1.0), CFLViolation);
}

TEST_CASE("lattice helpers") {
    for (int ik = 0; ik < kLat.nx; ++ik)
        for (int in = 0; in < kLat.ny; ++in)
            for (int il = 0; il < kLat.nz; ++il) {
                const std::size_t j = conjugate_index(kLat, ik, in, il);
                const int jk = int(j / (kLat.ny * kLat.nz)), jn = int(j / kLat.nz % kLat.ny), jl = int(j % kLat.nz);
                CHECK(conjugate_index(kLat, jk, jn, jl) == kLat.index(ik, in, il));
            }
    const auto mask = dealias_mask(kLat);
    long kept = 0;
    for (char m : mask) kept += m;
    CHECK(kept == 5 * 11 * 5);   // |k| <= 2, |n| <= 5, |l| <= 2
}

TEST_CASE("good unknowns") {
    const PhysParams p2 = PhysParams::make(0.01, 1.0, 2.0), p3 = PhysParams::make(0.01, 1.0, 3.0);
    // U3 = Theta = 0 with k U1 + eta U2 = 0
    const double eta = 3 * kLat.eta_unit();
    const cplx u2(0.4, -0.3);
    const FlowState s = mode_data(kLat, {{1, 3, 2, -eta * u2, u2, 0.0, 0.0}});
    const GoodUnknowns g2 = good_unknowns(s, p2), g3 = good_unknowns(s, p3);
    const std::size_t i = kLat.index(1, 3, 2);
    CHECK(std::abs(g2.Q[i]) == 0.0);
    CHECK(std::abs(g2.H[i]) == 0.0);
    const double ph = 1.0 + eta * eta, P = ph + 4.0;
    const cplx W3 = cplx(0.0, 1.0) * s.U2[i] - cplx(0.0, eta) * s.U1[i];
    CHECK(std::abs(g2.K[i] - cplx(0.0, -std::sqrt(2.0)) * std::pow(P, 0.25) / std::sqrt(ph) * W3) <= 1e-14);
    CHECK(std::abs(g2.K[i] / g3.K[i] - std::sqrt(2.0 / 1.5)) <= 1e-14);
    CHECK_THROWS_AS(good_unknowns(s, PhysParams::make(0.01, 1.0, 0.5)), InvalidParams);
}

TEST_CASE("energy functionals") {
    const PhysParams p = PhysParams::make(1e-3, 1.0, 2.0);
    const MultiplierTable tb = build_multiplier_table(kLat, p, 1.5, 0.0);
    const EnergyTerms z = energy_functionals(FlowState::zeros(kLat), tb, p, 2.0);
    CHECK(z.E_neq == 0.0);
    CHECK(z.F_neq == 0.0);

    // l = 0 slot: no cross term, E is the weighted sum of |Q|^2 + |K|^2 + |H|^2
    const FlowState s = mode_data(kLat, {{1, 2, 0, {0.3, 0.1}, {-0.2, 0.1}, {0.4, 0.0}, {0.1, -0.2}}});
    const GoodUnknowns g = good_unknowns(s, p);
    const EnergyTerms e = energy_functionals(s, g, tb, p, 2.0);
    double ref = 0.0;
    for (std::size_t i = 0; i < kLat.size(); ++i) {
        const double x2 = std::norm(g.Q[i]) + std::norm(g.K[i]) + std::norm(g.H[i]);
        if (x2 == 0.0) continue;
        const double k = kLat.k_of(int(i / (kLat.ny * kLat.nz)));
        const double eta = kLat.eta_of(int(i / kLat.nz % kLat.ny));
        ref += std::pow(1.0 + k * k + eta * eta, 2.0) * tb.A[i] * tb.A[i] * x2;
    }
    CHECK(e.E_neq == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("snapshot round trip") {
    const FlowState s = random_flow(kLat, 1.0, 9);
    const std::string path = (std::filesystem::temp_directory_path() / "bqs_unit_snapshot.bqss").string();
    write_snapshot(path, s);
    const FlowState r = read_snapshot(path);
    CHECK(r.t == s.t);
    CHECK(r.lat.nx == s.lat.nx);
    CHECK(r.lat.Ly == s.lat.Ly);
    for (int c = 0; c < 4; ++c) CHECK(r.field(c) == s.field(c));
    std::ofstream(path, std::ios::binary) << "JUNKJUNKJUNK";
    CHECK_THROWS_AS(read_snapshot(path), IOError);
    std::filesystem::remove(path);
}

TEST_CASE("exponential rate fit") {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < 20; ++i) s.emplace_back(i * 0.5, 3.0 * std::exp(-0.7 * i * 0.5));
    const RateFit f = exponential_rate_fit(s, {0.0, 10.0});
    CHECK(f.rate == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(exponential_rate_fit(s, {0.0, 1.0}), InsufficientSamples);
}
