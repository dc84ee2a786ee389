#include "bqs/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bqs/dispersion.hpp"
#include "bqs/errors.hpp"
#include "bqs/linear_zero_modes.hpp"
#include "bqs/multipliers.hpp"
#include "bqs/simulator.hpp"

namespace bqs {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(const char* f, double v) {
    char b[64];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

double norm3(const Vec3& v) { return std::sqrt(std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2])); }

double hnorm(const FlowState& s, double r, bool velocity) {
    double a = 0.0;
    if (velocity)
        for (int c = 0; c < 3; ++c) a += hr_norm2(s.field(c), s.lat, r);
    else
        a = hr_norm2(s.Theta, s.lat, r);
    return std::sqrt(a);
}

template <class F>
CriterionResult timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r = f();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace

CriterionResult ac1_zero_mode_propagator() {
    return timed([] {
        CriterionResult r;
        r.id = 1;
        r.name = "zero-mode propagator vs RK4 oracle";
        const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
        const Vec3 basis[3] = {Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}, Vec3{0.0, 0.0, 1.0}};
        const Vec3 mixed{cplx(0.3, -0.2), cplx(-0.5, 0.1), cplx(0.25, 0.4)};
        double worst = 0.0;
        std::string where;
        int cases = 0;
        for (int eta = -8; eta <= 8; ++eta)
            for (int l : {-4, -3, -2, -1, 1, 2, 3, 4})
                for (double t : {0.1, 1.0, 10.0}) {
                    const Mat3 M = simple_zero_propagator(p, eta, l, t);
                    double dt = oracle_dt(p, eta, l);
                    dt = t / std::ceil(t / dt);
                    for (const Vec3& v : {basis[0], basis[1], basis[2], mixed}) {
                        const Vec3 a = mat_apply(M, v);
                        const Vec3 o = rk4_oracle(p, eta, l, t, dt, v);
                        const Vec3 d{a[0] - o[0], a[1] - o[1], a[2] - o[2]};
                        const double e = norm3(d) / norm3(o);
                        ++cases;
                        if (e > worst) {
                            worst = e;
                            where = "eta=" + std::to_string(eta) + " l=" + std::to_string(l) + " t=" + fmt("%g", t);
                        }
                    }
                }
        r.passed = worst <= 1e-8;
        r.measured = fmt("max rel err %.3e", worst);
        r.threshold = "<= 1e-8";
        r.detail = std::to_string(cases) + " cases; worst at " + where;
        return r;
    });
}

CriterionResult ac2_double_zero_rotation() {
    return timed([] {
        CriterionResult r;
        r.id = 2;
        r.name = "double-zero rotation conservation (nu = 0)";
        const PhysParams p = PhysParams::make(0.0, 1.0, 2.0);
        double worst = 0.0;
        for (double eta : {0.0, 0.25, 1.0, 3.7, -8.0})
            for (const DoubleZeroState& in : {DoubleZeroState{0.0, cplx(1.0, 0.0), cplx(0.0, 0.0)},
                                              DoubleZeroState{cplx(0.2, 0.1), cplx(0.3, -0.7), cplx(-0.4, 0.9)}}) {
                const double e0 = std::norm(in.u3) + std::norm(in.theta);
                for (int i = 0; i <= 2000; ++i) {
                    const double t = 100.0 * i / 2000;
                    const DoubleZeroState o = double_zero_propagator(p, eta, t, in);
                    worst = std::max(worst, std::abs(std::norm(o.u3) + std::norm(o.theta) - e0) / e0);
                }
            }
        r.passed = worst <= 1e-12;
        r.measured = fmt("max rel drift %.3e", worst);
        r.threshold = "<= 1e-12 over t in [0, 100]";
        return r;
    });
}

CriterionResult ac3_multiplier_exactness(std::uint64_t seed) {
    return timed([seed] {
        CriterionResult r;
        r.id = 3;
        r.name = "multiplier exactness and ghost bounds";
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> kd(1, 16), ld(-16, 16);
        double worst_m = 0.0, worst_ms = 0.0;
        bool bounds_ok = true;
        std::ostringstream det;
        for (double nu : {1e-2, 1e-3, 1e-4}) {
            const PhysParams p = PhysParams::make(nu, 1.0, 2.0);
            const double W = critical_window(nu);
            for (int s = 0; s < 1000; ++s) {
                const int k = (u01(rng) < 0.5 ? -1 : 1) * kd(rng);
                const int l = ld(rng);
                const double eta = (2.0 * u01(rng) - 1.0) * 1.5 * W * k;
                const double t = u01(rng) * 3.0 * W;
                const Frequency f{k, eta, l};
                const double me = m_exact(t, f, nu), mo = m_ode_oracle(t, f, nu);
                worst_m = std::max(worst_m, std::abs(me - mo) / std::abs(mo));
                const double se = m_star_exact(t, k, eta, nu), so = m_star_ode_oracle(t, k, eta, nu);
                worst_ms = std::max(worst_ms, std::abs(se - so) / std::abs(so));
            }
            const BoundReport rep = verify_bounds_sampled(p, default_kappa(), 1000, seed + std::uint64_t(1e6 * nu));
            for (const BoundEntry& e : rep.entries)
                if (e.asserted && !e.passed) {
                    bounds_ok = false;
                    det << "nu=" << nu << " " << e.name << " margin " << e.margin << "; ";
                }
        }
        r.passed = worst_m <= 1e-6 && worst_ms <= 1e-6 && bounds_ok;
        std::ostringstream m;
        m << "m rel err " << fmt("%.2e", worst_m) << ", m* rel err " << fmt("%.2e", worst_ms)
          << ", bounds " << (bounds_ok ? "ok" : "violated");
        r.measured = m.str();
        r.threshold = "<= 1e-6; Mj in (0,1]; M6 >= c_alpha - 1e-10; rate bounds on k != 0";
        r.detail = det.str();
        return r;
    });
}

CriterionResult ac4_round_trips(std::uint64_t seed) {
    return timed([seed] {
        CriterionResult r;
        r.id = 4;
        r.name = "good-unknown and combined-quantity round trips";
        const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
        const Lattice lat = Lattice::make(8, 16, 8, 8.0 * kPi);
        std::mt19937_64 rng(seed);
        double worst_gu = 0.0, worst_cq = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            FlowState s = random_flow(lat, 1.0, rng(), false, 1.0);
            s.t = 5.0 * double(rng() >> 11) * 0x1.0p-53;
            project(s);
            const GoodUnknowns g = good_unknowns(s, p);
            const SpectralField U3 = u3_from_q(g, s.t, lat);
            const auto [U1, U2] = recover_velocity(g, U3, s.t, lat, p);
            double big = 0.0, bad = 0.0;
            const std::size_t slab = std::size_t(lat.ny) * lat.nz;
            for (std::size_t i = slab; i < lat.size(); ++i) {
                big = std::max({big, std::abs(s.U1[i]), std::abs(s.U2[i]), std::abs(s.U3[i])});
                bad = std::max({bad, std::abs(U1[i] - s.U1[i]), std::abs(U2[i] - s.U2[i]), std::abs(U3[i] - s.U3[i])});
            }
            worst_gu = std::max(worst_gu, bad / big);

            const ZeroModeState z = extract_zero_modes(lat, s.U1, s.U2, s.U3, s.Theta);
            const CombinedField cf = combined_quantities(z, p);
            ZeroModeState back = z;
            for (auto& v : back.u1) v = 0.0;
            for (auto& v : back.theta) v = 0.0;
            invert_combined(cf, p, back);
            double zb = 0.0, zbad = 0.0;
            for (std::size_t i = 0; i < z.u1.size(); ++i) {
                if (z.l_of(int(i % z.nz)) == 0) continue;
                zb = std::max({zb, std::abs(z.u1[i]), std::abs(z.theta[i])});
                zbad = std::max({zbad, std::abs(back.u1[i] - z.u1[i]), std::abs(back.theta[i] - z.theta[i])});
            }
            if (zb > 0.0) worst_cq = std::max(worst_cq, zbad / zb);
        }
        r.passed = worst_gu <= 1e-10 && worst_cq <= 1e-10;
        r.measured = "good unknowns " + fmt("%.2e", worst_gu) + ", combined " + fmt("%.2e", worst_cq);
        r.threshold = "<= 1e-10 on 100 random divergence-free states";
        return r;
    });
}

CriterionResult ac5_dispersive_decay() {
    return timed([] {
        CriterionResult r;
        r.id = 5;
        r.name = "dispersive decay of the zero-mode semigroup";
        const int ny = 4096, nz = 4, l = 1;
        const double Ly = 400.0, sigma = 0.85;
        const Field2D data = gaussian_data(ny, nz, Ly, sigma, l);
        std::vector<double> ts;
        for (int i = 0; i < 32; ++i) ts.push_back(5.0 * std::pow(10.0, i / 31.0));
        const PhysParams pq = PhysParams::make(0.0, 2.0, 2.0);            // q = 1
        const PhysParams p0 = PhysParams::make(0.0, std::sqrt(2.0), 2.0);  // q = 0
        const DispersiveSeries s1 = dispersive_decay(pq, data, ts, {5.0, 50.0});
        const DispersiveSeries s0 = dispersive_decay(p0, data, ts, {5.0, 50.0});
        const DecayFit f0 = decay_fit(s0.series, {5.0, 50.0});
        const DecayFit& f1 = s1.fit;
        r.passed = f1.exponent >= -0.40 && f1.exponent <= -0.26 && f1.r2 >= 0.98 && std::abs(f0.exponent) <= 0.05;
        r.measured = "q=1 exponent " + fmt("%.4f", f1.exponent) + " (r2 " + fmt("%.4f", f1.r2) +
                     "), q=0 exponent " + fmt("%.4f", f0.exponent);
        r.threshold = "q=1 in [-0.40, -0.26] with r2 >= 0.98; q=0 in [-0.05, 0.05]";
        r.detail = "Gaussian sigma 0.85, Ly 400, ny 4096, l 1, 32 times in [5, 50]";
        return r;
    });
}

CriterionResult ac6_enhanced_dissipation() {
    return timed([] {
        CriterionResult r;
        r.id = 6;
        r.name = "enhanced dissipation and energy inequality";
        const PhysParams p = PhysParams::make(1e-3, 1.0, 2.0);
        const Lattice lat = Lattice::make(32, 64, 32, 8.0 * kPi);
        const FlowState s = mode_data(lat, {{1, 0, 1, {0.3, 0.1}, {0.2, -0.4}, {0.1, 0.2}, {0.5, 0.1}},
                                            {1, 4, 2, {-0.2, 0.3}, {0.1, 0.1}, {0.4, -0.1}, {-0.2, 0.3}},
                                            {2, -3, 1, {0.1, 0.0}, {0.3, 0.2}, {-0.3, 0.1}, {0.1, -0.1}},
                                            {-1, 6, 3, {0.2, 0.2}, {-0.1, 0.3}, {0.2, 0.0}, {0.3, 0.3}}});
        SimOptions o;
        o.t_end = 60.0;
        o.dt = 0.01;
        o.diag_every = 0.25;
        const RunResult run = run_simulation(s, p, o);
        const EnergyReport rep = diagnostics(run, {10.0, 60.0});
        const double target = 0.5 * p.lambda() * std::cbrt(p.nu);
        r.passed = rep.rate_neq.rate >= target && rep.max_printed_ratio <= 1.0;
        r.measured = "rate " + fmt("%.4g", rep.rate_neq.rate) + ", energy lhs/rhs " + fmt("%.4f", rep.max_printed_ratio);
        r.threshold = ">= " + fmt("%.4g", target) + " (0.5 lambda nu^{1/3}); lhs/rhs <= 1 with constant " +
                      fmt("%.4f", (2.0 * std::sqrt(p.b_beta()) + 1.0) / (2.0 * std::sqrt(p.b_beta()) - 1.0));
        r.detail = "fit window [10, 60]; E+intF form ratio " + fmt("%.4f", rep.max_integrated_ratio) +
                   "; A-weighted form ratio " + fmt("%.4f", rep.max_weighted_ratio);
        return r;
    });
}

CriterionResult ac7_inviscid_damping() {
    return timed([] {
        CriterionResult r;
        r.id = 7;
        r.name = "inviscid damping bound and refinement stability";
        const PhysParams p = PhysParams::make(1e-3, 1.0, 2.0);
        double C[2];
        int idx = 0;
        for (int ny : {32, 48}) {
            const Lattice lat = Lattice::make(32, ny, 32, 8.0 * kPi);
            const FlowState s = gaussian_curl_data(lat, 1, 1, 2.0, 1.0, 3.0);
            SimOptions o;
            o.t_end = 100.0;
            o.dt = 0.01;
            o.diag_every = 0.25;
            o.energy = false;
            o.sup_norms = false;
            const RunResult run = run_simulation(s, p, o);
            const EnergyReport rep = diagnostics(run, {0.0, 100.0});
            C[idx++] = rep.sup_weighted_U2 / (hnorm(s, 5.0, true) + hnorm(s, 4.0, false));
        }
        const double rel = std::abs(C[1] / C[0] - 1.0);
        r.passed = std::isfinite(C[0]) && C[0] > 0.0 && rel <= 0.2;
        r.measured = "C(ny=32) " + fmt("%.5g", C[0]) + ", C(ny=48) " + fmt("%.5g", C[1]) + ", change " + fmt("%.2f%%", 100.0 * rel);
        r.threshold = "change <= 20%";
        return r;
    });
}

CriterionResult ac8_lift_up() {
    return timed([] {
        CriterionResult r;
        r.id = 8;
        r.name = "lift-up cancellation";
        const Lattice lat = Lattice::make(32, 64, 32, 8.0 * kPi);
        const double eta = 2.0 * lat.eta_unit();
        const cplx u2(0.5, 0.2);
        const FlowState s = mode_data(lat, {{0, 2, 1, 0.0, u2, -eta * u2, 0.0}});
        double peak[2];
        int idx = 0;
        for (const PhysParams& p : {PhysParams::make(1e-3, 1.0, 2.0), PhysParams::make(1e-3, 0.0, 0.0)}) {
            SimOptions o;
            o.t_end = 50.0;
            o.dt = 0.01;
            o.energy = false;
            o.sup_norms = false;
            o.diag_every = 0.25;
            peak[idx++] = diagnostics(run_simulation(s, p, o), {0.0, 50.0}).max_u1_simple;
        }
        const double ratio = peak[1] / peak[0];
        r.passed = ratio >= 10.0;
        r.measured = "ratio " + fmt("%.3f", ratio) + " (control " + fmt("%.4g", peak[1]) + ", rotating " + fmt("%.4g", peak[0]) + ")";
        r.threshold = ">= 10";
        return r;
    });
}

CriterionResult ac9_nonlinear_certificate(std::uint64_t seed) {
    return timed([seed] {
        CriterionResult r;
        r.id = 9;
        r.name = "nonlinear no-blow-up certificate";
        const PhysParams p = PhysParams::make(0.01, 1.0, 2.0);
        const Lattice lat = Lattice::make(32, 64, 32, 8.0 * kPi);
        const FlowState s = random_flow(lat, 1e-3, seed, true);
        SimOptions o;
        o.dynamics = Dynamics::Nonlinear;
        o.t_end = 50.0;
        o.dt = 0.01;
        o.diag_every = 0.5;
        o.sup_norms = false;
        o.div_every_step = true;
        const RunResult run = run_simulation(s, p, o);
        const EnergyReport rep = diagnostics(run, {0.0, 50.0});
        const double E0 = run.rows.front().E_neq, ET = run.rows.back().E_neq;
        r.passed = ET <= E0 && rep.max_norm_ratio <= 2.0 && run.max_div_residual <= 1e-10;
        r.measured = "E(50)/E(0) " + fmt("%.3e", ET / E0) + ", max norm ratio " + fmt("%.4f", rep.max_norm_ratio) +
                     ", max div " + fmt("%.2e", run.max_div_residual);
        r.threshold = "E(50) <= E(0); norm <= 2x initial; div <= 1e-10";
        return r;
    });
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, std::uint64_t seed,
                                            const std::function<void(const CriterionResult&)>& on_done) {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 9; ++id) {
        if (!ids.empty() && std::find(ids.begin(), ids.end(), id) == ids.end()) continue;
        CriterionResult r;
        try {
            switch (id) {
                case 1: r = ac1_zero_mode_propagator(); break;
                case 2: r = ac2_double_zero_rotation(); break;
                case 3: r = seed ? ac3_multiplier_exactness(seed) : ac3_multiplier_exactness(); break;
                case 4: r = seed ? ac4_round_trips(seed) : ac4_round_trips(); break;
                case 5: r = ac5_dispersive_decay(); break;
                case 6: r = ac6_enhanced_dissipation(); break;
                case 7: r = ac7_inviscid_damping(); break;
                case 8: r = ac8_lift_up(); break;
                default: r = seed ? ac9_nonlinear_certificate(seed) : ac9_nonlinear_certificate(); break;
            }
        } catch (const std::exception& e) {
            r.id = id;
            r.name = "criterion " + std::to_string(id);
            r.passed = false;
            r.measured = "error";
            r.detail = e.what();
        }
        if (on_done) on_done(r);
        out.push_back(r);
    }
    return out;
}

std::string criterion_line(const CriterionResult& r) {
    std::ostringstream os;
    os << "AC" << r.id << " " << (r.passed ? "PASS" : "FAIL") << "  " << r.name << ": " << r.measured << " ["
       << r.threshold << "] " << fmt("%.1fs", r.seconds);
    if (!r.detail.empty()) os << " -- " << r.detail;
    return os.str();
}

std::string acceptance_json(const std::vector<CriterionResult>& results) {
    nlohmann::ordered_json j;
    bool all = true;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        all = all && r.passed;
        nlohmann::ordered_json e;
        e["id"] = r.id;
        e["name"] = r.name;
        e["passed"] = r.passed;
        e["measured"] = r.measured;
        e["threshold"] = r.threshold;
        e["seconds"] = r.seconds;
        e["detail"] = r.detail;
        arr.push_back(e);
    }
    j["all_passed"] = all;
    j["criteria"] = arr;
    return j.dump(2);
}

}  // namespace bqs
