#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "bqs/multipliers.hpp"

using namespace bqs;

namespace {

constexpr double kPi = 3.14159265358979323846;

// RK4 on d/dt log m = -rate, written independently of the library; the
// step sequence is split at the critical time where the rate has a kink.
double m_by_rk4(double t, int k, double eta, int l, double nu, double m0) {
    const double W = 1000.0 / std::cbrt(nu);
    auto rate = [&](double s) {
        const double e = eta - k * s;
        if (std::abs(s - eta / k) > W) return 0.0;
        return 0.5 * std::abs(k * e) / (double(k) * k + e * e + double(l) * l);
    };
    double y = std::log(m0);
    auto march = [&](double a, double b) {
        const int n = 4000;
        const double h = (b - a) / n;
        for (int i = 0; i < n; ++i) {
            const double s = a + i * h;
            y += h / 6 * (-rate(s) - 4 * rate(s + h / 2) - rate(s + h));
        }
    };
    const double r = eta / k;
    if (r > 0.0 && r < t) {
        march(0.0, r);
        march(r, t);
    } else {
        march(0.0, t);
    }
    return std::exp(y);
}

}  // namespace

TEST_CASE("m examples") {
    CHECK(m_exact(3.0, {0, 5.0, 2}, 1e-3) == 1.0);
    for (double t : {0.0, 10.0, 1e4}) CHECK(m_exact(t, {1, -1e5, 3}, 1e-3) == 1.0);
    CHECK(m_exact(0.0, {1, 1.0, 0}, 1e-3) == doctest::Approx(std::pow(2.0, 0.25)));
    CHECK(m_ode_oracle(0.0, {1, 1.0, 0}, 1e-3) == doctest::Approx(std::pow(2.0, 0.25)));
}

TEST_CASE("m_exact against an RK4 integration of its rate") {
    for (const Frequency f : {Frequency{1, 3.0, 1}, Frequency{2, -4.0, 3}, Frequency{-3, 6.0, 0}, Frequency{1, 0.5, 2}})
        for (double t : {0.5, 2.0, 7.0}) {
            const double ref = m_by_rk4(t, f.k, f.eta, f.l, 1e-3, m_initial(f, 1e-3));
            CHECK(m_exact(t, f, 1e-3) == doctest::Approx(ref).epsilon(1e-9));
        }
}

TEST_CASE("m_star examples") {
    CHECK(m_star_exact(5.0, 1, -1e5, 1e-3) == 1.0);
    CHECK(m_star_exact(0.0, 1, 1.0, 1e-3) == doctest::Approx(std::sqrt(2.0)));
    CHECK(m_star_exact(2.0, 0, 1.0, 1e-3) == 1.0);
    for (double t : {0.3, 1.0, 4.0, 40.0})
        CHECK(m_star_exact(t, 2, 7.0, 1e-3) == doctest::Approx(m_star_ode_oracle(t, 2, 7.0, 1e-3)).epsilon(1e-8));
}

TEST_CASE("ghost multipliers") {
    const PhysParams p = PhysParams::make(1e-3, 1.0, 2.0);
    const Frequency f{1, 2.0, 1};
    for (int j = 1; j <= 7; ++j) CHECK(ghost_multiplier(j, 0.0, f, p, 1.5) == 1.0);

    // M1 closed form against a Simpson integration of its rate
    const double t = 30.0;
    const int n = 6000;
    double I = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        I += w * ghost_rate(1, t * i / n, f, p, 1.5);
    }
    I *= t / n / 3.0;
    CHECK(ghost_multiplier(1, t, f, p, 1.5) == doctest::Approx(std::exp(-I)).epsilon(1e-10));

    // M1 never drops below e^{-pi}
    CHECK(ghost_multiplier(1, 1e7, f, p, 1.5) >= std::exp(-kPi));

    const double m6 = ghost_multiplier(6, 100.0, {1, 0.0, 1}, p, 1.5);
    CHECK(m6 <= 1.0);
    CHECK(m6 >= std::exp(-kPi / std::sqrt(2.0)));
}

TEST_CASE("cross operator G") {
    const PhysParams p = PhysParams::make(1e-3, 1.0, 2.0);
    CHECK(cross_operator_G(0.4, {2, 1.0, 0}, p) == 0.0);
    CHECK(cross_operator_G(2.0, {1, 2.0, 3}, p) == 0.0);
    CHECK(cross_operator_G(1.0, {0, 2.0, 3}, p) == 0.0);

    const PhysParams b1 = PhysParams::make(1e-3, 1.0, 0.5 * (1.0 + std::sqrt(5.0)));   // B = 1
    const double g = cross_operator_G(0.0, {1, 2.0, 1}, b1);
    CHECK(g == doctest::Approx(-0.5 / std::sqrt(6.0) * (-4.0 / 5.0)).epsilon(1e-12));
    CHECK(std::abs(g) <= 0.5);

    const Frequency f{2, 3.0, -2};
    for (double t : {0.2, 1.1, 4.0}) {
        const double h = 1e-5;
        const double fd = (cross_operator_G(t + h, f, p) - cross_operator_G(t - h, f, p)) / (2 * h);
        CHECK(cross_operator_G_dt(t, f, p) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("tracker agrees with direct table construction") {
    const PhysParams p = PhysParams::make(1e-2, 1.0, 2.0);
    const Lattice lat = Lattice::make(4, 8, 4, 2 * kPi);
    MultiplierTracker tr(lat, p, 1.5);
    tr.advance_to(0.7);
    tr.advance_to(2.5);
    const MultiplierTable a = tr.table();
    const MultiplierTable b = build_multiplier_table(lat, p, 1.5, 2.5);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        CHECK(a.M[i] == doctest::Approx(b.M[i]).epsilon(1e-9));
        CHECK(a.m[i] == doctest::Approx(b.m[i]).epsilon(1e-12));
    }
    CHECK_THROWS(MultiplierTracker(lat, p, 1.5, std::vector<char>(3, 1)));
}

TEST_CASE("bound verification") {
    const PhysParams p = PhysParams::make(1e-3, 1.0, 2.0);
    const BoundReport rep = verify_bounds_sampled(p, default_kappa(), 300, 5);
    CHECK(rep.all_passed());
    const auto j = nlohmann::json::parse(rep.to_json());
    REQUIRE(j.is_array());
    for (const auto& e : j) {
        CHECK(e.contains("name"));
        CHECK(e.contains("worst_slot"));
        CHECK(e.contains("margin"));
        CHECK(e.contains("samples"));
    }
    CHECK(default_kappa() == doctest::Approx(1.5));

    const Lattice lat = Lattice::make(4, 8, 4, 2 * kPi);
    const BoundReport r2 = verify_bounds(build_multiplier_table(lat, p, 1.5, 3.0), p);
    CHECK(r2.all_passed());
}
