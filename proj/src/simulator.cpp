#include "bqs/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "bqs/errors.hpp"
#include "bqs/fft.hpp"

namespace bqs {

namespace {

constexpr double kPi = 3.14159265358979323846;

Frequency freq_at(const Lattice& lat, std::size_t i) {
    const int il = int(i % lat.nz);
    const int in = int((i / lat.nz) % lat.ny);
    const int ik = int(i / (std::size_t(lat.nz) * lat.ny));
    return lat.frequency(ik, in, il);
}

}  // namespace

FlowState FlowState::zeros(const Lattice& lat) {
    FlowState s;
    s.lat = lat;
    s.U1 = s.U2 = s.U3 = s.Theta = lat.zeros();
    return s;
}

std::size_t conjugate_index(const Lattice& lat, int ik, int in, int il) {
    return lat.index(Lattice::slot(-lat.k_of(ik), lat.nx) % lat.nx,
                     Lattice::slot(-lat.n_of(in), lat.ny) % lat.ny,
                     Lattice::slot(-lat.l_of(il), lat.nz) % lat.nz);
}

std::vector<char> dealias_mask(const Lattice& lat) {
    std::vector<char> m(lat.size(), 0);
    for (int ik = 0; ik < lat.nx; ++ik)
        for (int in = 0; in < lat.ny; ++in)
            for (int il = 0; il < lat.nz; ++il)
                m[lat.index(ik, in, il)] = 3 * std::abs(lat.k_of(ik)) < lat.nx &&
                                           3 * std::abs(lat.n_of(in)) < lat.ny &&
                                           3 * std::abs(lat.l_of(il)) < lat.nz;
    return m;
}

void dealias(FlowState& s) {
    const auto m = dealias_mask(s.lat);
    for (int c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < m.size(); ++i)
            if (!m[i]) s.field(c)[i] = 0.0;
}

void project(FlowState& s) {
    const std::size_t n = s.lat.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Frequency f = freq_at(s.lat, i);
        const double x1 = f.k, x2 = f.eta - f.k * s.t, x3 = f.l;
        const double p = x1 * x1 + x2 * x2 + x3 * x3;
        if (p == 0.0) {
            s.U2[i] = 0.0;
            continue;
        }
        const cplx d = (x1 * s.U1[i] + x2 * s.U2[i] + x3 * s.U3[i]) / p;
        s.U1[i] -= x1 * d;
        s.U2[i] -= x2 * d;
        s.U3[i] -= x3 * d;
    }
}

double divergence_residual(const FlowState& s) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s.lat.size(); ++i) {
        const Frequency f = freq_at(s.lat, i);
        const double x1 = f.k, x2 = f.eta - f.k * s.t, x3 = f.l;
        const double xn = std::sqrt(x1 * x1 + x2 * x2 + x3 * x3);
        const double un = std::sqrt(std::norm(s.U1[i]) + std::norm(s.U2[i]) + std::norm(s.U3[i]));
        if (xn == 0.0 || un == 0.0) continue;
        worst = std::max(worst, std::abs(x1 * s.U1[i] + x2 * s.U2[i] + x3 * s.U3[i]) / (xn * un));
    }
    return worst;
}

double reality_defect(const FlowState& s) {
    double big = 0.0, bad = 0.0;
    const Lattice& lat = s.lat;
    for (int c = 0; c < 4; ++c) {
        const SpectralField& f = s.field(c);
        for (int ik = 0; ik < lat.nx; ++ik)
            for (int in = 0; in < lat.ny; ++in)
                for (int il = 0; il < lat.nz; ++il) {
                    const std::size_t i = lat.index(ik, in, il), j = conjugate_index(lat, ik, in, il);
                    big = std::max(big, std::abs(f[i]));
                    bad = std::max(bad, std::abs(f[i] - std::conj(f[j])));
                }
    }
    return big > 0.0 ? bad / big : 0.0;
}

void enforce_mean_constraint(FlowState& s) {
    for (int in = 0; in < s.lat.ny; ++in) {
        const std::size_t i = s.lat.index(0, in, 0);
        s.U3[i] = 0.0;
        s.Theta[i] = 0.0;
    }
}

SpectralField project_zero(const SpectralField& f, const Lattice& lat) {
    SpectralField out(f.size(), cplx(0.0));
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    std::copy(f.begin(), f.begin() + slab, out.begin());
    return out;
}

SpectralField project_neq(const SpectralField& f, const Lattice& lat) {
    SpectralField out = f;
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    std::fill(out.begin(), out.begin() + slab, cplx(0.0));
    return out;
}

double viscous_integral(double t0, double s, const Frequency& f) {
    const double k = f.k, l = f.l, a = f.eta - f.k * t0;
    return (k * k + l * l) * s + a * a * s - a * k * s * s + k * k * s * s * s / 3.0;
}

// ---------------------------------------------------------------- stepper

struct Simulator::Work {
    std::unique_ptr<Fft3DReal> fft;
    std::array<std::vector<double>, 4> phys;
    std::vector<double> prod;
    SpectralField spec;
    Fields k1, k2, k3, k4, stage, tmp;
    std::vector<double> eh, e1, e1h;
};

Simulator::Simulator(const Lattice& lat, const PhysParams& p, Dynamics dyn)
    : lat_(lat), p_(p), dyn_(dyn), w_(std::make_unique<Work>()) {
    const std::size_t n = lat.size();
    if (dyn == Dynamics::Nonlinear) {
        mask_ = dealias_mask(lat);
        w_->fft = std::make_unique<Fft3DReal>(lat.nx, lat.ny, lat.nz);
        for (auto& v : w_->phys) v.assign(n, 0.0);
        w_->prod.assign(n, 0.0);
        w_->spec.assign(n, cplx(0.0));
    } else {
        mask_.assign(n, 1);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (mask_[i]) active_.push_back(i);
    for (Fields* f : {&w_->k1, &w_->k2, &w_->k3, &w_->k4, &w_->stage, &w_->tmp})
        for (auto& c : *f) c.assign(n, cplx(0.0));
}

Simulator::~Simulator() = default;

void Simulator::set_active_from(const FlowState& s) {
    if (dyn_ == Dynamics::Nonlinear) return;
    active_.clear();
    for (std::size_t i = 0; i < lat_.size(); ++i)
        if (s.U1[i] != cplx(0.0) || s.U2[i] != cplx(0.0) || s.U3[i] != cplx(0.0) || s.Theta[i] != cplx(0.0))
            active_.push_back(i);
}

double Simulator::xi_max(double t) const {
    double best = 0.0;
    for (std::size_t i : active_) {
        const Frequency f = freq_at(lat_, i);
        best = std::max(best, std::sqrt(symbol_p(t, f)));
    }
    return best;
}

double Simulator::cfl_limit(const FlowState& s) {
    double umax = 0.0;
    if (dyn_ == Dynamics::Nonlinear) {
        for (int c = 0; c < 3; ++c) {
            w_->fft->to_physical(s.field(c).data(), w_->phys[c].data());
            for (double v : w_->phys[c]) umax = std::max(umax, std::abs(v));
        }
    }
    const double denom = p_.alpha + std::abs(p_.beta) + umax * xi_max(s.t);
    return denom > 0.0 ? 0.2 / denom : std::numeric_limits<double>::infinity();
}

void Simulator::nonlinear(double t, const Fields& u, Fields& out, double* umax) {
    Work& w = *w_;
    for (int c = 0; c < 4; ++c) w.fft->to_physical(u[c].data(), w.phys[c].data());
    if (umax) {
        double m = 0.0;
        for (int c = 0; c < 3; ++c)
            for (double v : w.phys[c]) m = std::max(m, std::abs(v));
        *umax = m;
    }
    const std::size_t n = lat_.size();
    for (auto& o : out) std::fill(o.begin(), o.end(), cplx(0.0));
    // out_i -= i xi_j (a b)^ for each product, accumulated pair by pair
    auto accumulate = [&](int a, int b) {
        const double* pa = w.phys[a].data();
        const double* pb = w.phys[b].data();
        for (std::size_t i = 0; i < n; ++i) w.prod[i] = pa[i] * pb[i];
        w.fft->to_spectral(w.prod.data(), w.spec.data());
        for (std::size_t i : active_) {
            const Frequency f = freq_at(lat_, i);
            const double xi[3] = {double(f.k), f.eta - f.k * t, double(f.l)};
            const cplx T = w.spec[i];
            if (a < 3) {
                // velocity pair (a, b), a <= b < 3
                out[a][i] -= cplx(0.0, xi[b]) * T;
                if (a != b) out[b][i] -= cplx(0.0, xi[a]) * T;
            } else {
                out[3][i] -= cplx(0.0, xi[b]) * T;
            }
        }
    };
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) accumulate(a, b);
    for (int b = 0; b < 3; ++b) accumulate(3, b);
    for (std::size_t i : active_) {
        const Frequency f = freq_at(lat_, i);
        const double x1 = f.k, x2 = f.eta - f.k * t, x3 = f.l;
        const double p = x1 * x1 + x2 * x2 + x3 * x3;
        if (p == 0.0) continue;
        const cplx d = (x1 * out[0][i] + x2 * out[1][i] + x3 * out[2][i]) / p;
        out[0][i] -= x1 * d;
        out[1][i] -= x2 * d;
        out[2][i] -= x3 * d;
    }
}

void Simulator::rhs(double t, const Fields& u, Fields& out, double* umax) {
    if (dyn_ == Dynamics::Nonlinear) {
        nonlinear(t, u, out, umax);
    } else {
        for (std::size_t i : active_)
            for (int c = 0; c < 4; ++c) out[c][i] = 0.0;
    }
    const double a = p_.alpha, b = p_.beta;
    for (std::size_t i : active_) {
        const Frequency f = freq_at(lat_, i);
        const double x1 = f.k, x2 = f.eta - f.k * t, x3 = f.l;
        const double p = x1 * x1 + x2 * x2 + x3 * x3;
        const cplx U1 = u[0][i], U2 = u[1][i], U3 = u[2][i], Th = u[3][i];
        if (p == 0.0) {
            out[2][i] += -a * Th;
            out[3][i] += a * U3;
            continue;
        }
        const cplx s = (x1 * (b - 2.0) * U2 - b * x2 * U1 - a * x3 * Th) / p;
        out[0][i] += -(1.0 - b) * U2 - x1 * s;
        out[1][i] += -b * U1 - x2 * s;
        out[2][i] += -a * Th - x3 * s;
        out[3][i] += a * U3;
    }
}

void Simulator::step(FlowState& s, double dt) {
    if (!(dt > 0.0)) throw InvalidParams("step needs dt > 0");
    Work& w = *w_;
    const double t0 = s.t, th = t0 + 0.5 * dt, t1 = t0 + dt;
    const std::size_t na = active_.size();
    w.eh.resize(na);
    w.e1.resize(na);
    w.e1h.resize(na);
    for (std::size_t q = 0; q < na; ++q) {
        const Frequency f = freq_at(lat_, active_[q]);
        const double Ih = viscous_integral(t0, 0.5 * dt, f), I1 = viscous_integral(t0, dt, f);
        w.eh[q] = std::exp(-p_.nu * Ih);
        w.e1[q] = std::exp(-p_.nu * I1);
        w.e1h[q] = std::exp(-p_.nu * viscous_integral(th, 0.5 * dt, f));
    }
    Fields& u0 = w.stage;
    for (int c = 0; c < 4; ++c) {
        const SpectralField& src = s.field(c);
        for (std::size_t i : active_) u0[c][i] = src[i];
    }

    double umax = 0.0;
    rhs(t0, u0, w.k1, dyn_ == Dynamics::Nonlinear ? &umax : nullptr);
    {
        const double denom = p_.alpha + std::abs(p_.beta) + umax * xi_max(t0);
        const double limit = denom > 0.0 ? 0.2 / denom : std::numeric_limits<double>::infinity();
        if (dt > limit * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "dt = " << dt << " exceeds the limit " << limit << " at t = " << t0;
            throw CFLViolation(os.str());
        }
    }
    Fields& tmp = w.tmp;
    for (int c = 0; c < 4; ++c)
        for (std::size_t q = 0; q < na; ++q) {
            const std::size_t i = active_[q];
            tmp[c][i] = w.eh[q] * (u0[c][i] + 0.5 * dt * w.k1[c][i]);
        }
    rhs(th, tmp, w.k2, nullptr);
    for (int c = 0; c < 4; ++c)
        for (std::size_t q = 0; q < na; ++q) {
            const std::size_t i = active_[q];
            tmp[c][i] = w.eh[q] * u0[c][i] + 0.5 * dt * w.k2[c][i];
        }
    rhs(th, tmp, w.k3, nullptr);
    for (int c = 0; c < 4; ++c)
        for (std::size_t q = 0; q < na; ++q) {
            const std::size_t i = active_[q];
            tmp[c][i] = w.e1[q] * u0[c][i] + dt * w.e1h[q] * w.k3[c][i];
        }
    rhs(t1, tmp, w.k4, nullptr);
    for (int c = 0; c < 4; ++c) {
        SpectralField& out = s.field(c);
        for (std::size_t q = 0; q < na; ++q) {
            const std::size_t i = active_[q];
            out[i] = w.e1[q] * u0[c][i] +
                     dt / 6.0 *
                         (w.e1[q] * w.k1[c][i] + 2.0 * w.e1h[q] * (w.k2[c][i] + w.k3[c][i]) + w.k4[c][i]);
        }
    }
    s.t = t1;
    for (std::size_t i : active_) {
        const Frequency f = freq_at(lat_, i);
        const double x1 = f.k, x2 = f.eta - f.k * t1, x3 = f.l;
        const double p = x1 * x1 + x2 * x2 + x3 * x3;
        if (p == 0.0) {
            s.U2[i] = 0.0;
            continue;
        }
        const cplx d = (x1 * s.U1[i] + x2 * s.U2[i] + x3 * s.U3[i]) / p;
        s.U1[i] -= x1 * d;
        s.U2[i] -= x2 * d;
        s.U3[i] -= x3 * d;
    }
    bool finite = true;
    for (int c = 0; c < 4 && finite; ++c)
        for (std::size_t i : active_) {
            const cplx v = s.field(c)[i];
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                finite = false;
                break;
            }
        }
    if (!finite) {
        if (!nan_dump_path.empty()) write_snapshot(nan_dump_path, s);
        std::ostringstream os;
        os << "non-finite coefficient at t = " << t1;
        if (!nan_dump_path.empty()) os << "; state written to " << nan_dump_path;
        throw NaNDetected(os.str());
    }
}

FlowState linear_step(const FlowState& s, double dt, const PhysParams& p) {
    Simulator sim(s.lat, p, Dynamics::Linear);
    sim.set_active_from(s);
    FlowState out = s;
    sim.step(out, dt);
    return out;
}

FlowState nonlinear_step(const FlowState& s, double dt, const PhysParams& p) {
    Simulator sim(s.lat, p, Dynamics::Nonlinear);
    FlowState out = s;
    sim.step(out, dt);
    return out;
}

// ---------------------------------------------------------------- good unknowns

namespace {

double k_prefactor(const PhysParams& p) {
    const double r = p.beta / (p.beta - 1.0);
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidParams("good unknowns need beta/(beta-1) > 0");
    return std::sqrt(r);
}

}  // namespace

GoodUnknowns good_unknowns(const FlowState& s, const PhysParams& p) {
    const double c = k_prefactor(p);
    const Lattice& lat = s.lat;
    GoodUnknowns g{lat.zeros(), lat.zeros(), lat.zeros()};
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    for (std::size_t i = slab; i < lat.size(); ++i) {
        if (s.U1[i] == cplx(0.0) && s.U2[i] == cplx(0.0) && s.U3[i] == cplx(0.0) && s.Theta[i] == cplx(0.0))
            continue;
        const Frequency f = freq_at(lat, i);
        const double P = symbol_p(s.t, f), ph = symbol_ph(s.t, f);
        const double x2 = f.eta - f.k * s.t;
        const cplx W3 = cplx(0.0, f.k) * s.U2[i] - cplx(0.0, x2) * s.U1[i];
        g.Q[i] = -std::pow(P, 0.75) / std::sqrt(ph) * s.U3[i];
        g.K[i] = cplx(0.0, -c) * std::pow(P, 0.25) / std::sqrt(ph) * W3;
        g.H[i] = -std::pow(P, 0.25) * s.Theta[i];
    }
    return g;
}

std::pair<SpectralField, SpectralField> recover_velocity(const GoodUnknowns& gu, const SpectralField& U3,
                                                         double t, const Lattice& lat, const PhysParams& p) {
    const double c = k_prefactor(p);
    SpectralField U1 = lat.zeros(), U2 = lat.zeros();
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    for (std::size_t i = slab; i < lat.size(); ++i) {
        const Frequency f = freq_at(lat, i);
        const double P = symbol_p(t, f), ph = symbol_ph(t, f);
        const double x2 = f.eta - f.k * t, k = f.k, l = f.l;
        const cplx W3 = gu.K[i] * std::sqrt(ph) / (cplx(0.0, -c) * std::pow(P, 0.25));
        U1[i] = (cplx(0.0, x2) * W3 - k * l * U3[i]) / ph;
        U2[i] = (cplx(0.0, -k) * W3 - x2 * l * U3[i]) / ph;
    }
    return {U1, U2};
}

SpectralField u3_from_q(const GoodUnknowns& gu, double t, const Lattice& lat) {
    SpectralField U3 = lat.zeros();
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    for (std::size_t i = slab; i < lat.size(); ++i) {
        const Frequency f = freq_at(lat, i);
        U3[i] = -gu.Q[i] * std::sqrt(symbol_ph(t, f)) / std::pow(symbol_p(t, f), 0.75);
    }
    return U3;
}

double hr_norm2(const SpectralField& f, const Lattice& lat, double r, bool nonzero_only) {
    double s = 0.0;
    const std::size_t start = nonzero_only ? std::size_t(lat.ny) * lat.nz : 0;
    for (std::size_t i = start; i < lat.size(); ++i) {
        if (f[i] == cplx(0.0)) continue;
        const Frequency q = freq_at(lat, i);
        const double w = 1.0 + double(q.k) * q.k + q.eta * q.eta + double(q.l) * q.l;
        s += std::pow(w, r) * std::norm(f[i]);
    }
    return s;
}

// ---------------------------------------------------------------- energy

EnergyTerms energy_functionals(const FlowState& s, const GoodUnknowns& gu, const MultiplierTable& tb,
                               const PhysParams& p, double r) {
    p.require_b_above_quarter("energy functionals");
    if (std::abs(tb.time - s.t) > 1e-9) throw InvalidParams("multiplier table time differs from the state");
    const Lattice& lat = s.lat;
    const double sw = p.sandwich();
    EnergyTerms e;
    e.worst_sandwich = std::numeric_limits<double>::infinity();
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    for (std::size_t i = slab; i < lat.size(); ++i) {
        const double x2 = std::norm(gu.Q[i]) + std::norm(gu.K[i]) + std::norm(gu.H[i]);
        if (x2 == 0.0) continue;
        const Frequency f = freq_at(lat, i);
        const double w = std::pow(1.0 + double(f.k) * f.k + f.eta * f.eta + double(f.l) * f.l, r);
        const double G = cross_operator_G(s.t, f, p);
        const double cross = 2.0 * G * (gu.Q[i] * std::conj(gu.K[i])).real();
        const double slot_e = x2 + cross;
        const double ratio = slot_e / x2;
        if (ratio < 1.0 - sw - 1e-10) {
            std::ostringstream os;
            os << "sandwich lower bound failed at (k=" << f.k << ", eta=" << f.eta << ", l=" << f.l
               << "): ratio " << ratio << " < " << 1.0 - sw;
            throw CoercivityLost(os.str());
        }
        e.worst_sandwich = std::min(e.worst_sandwich, ratio - (1.0 - sw));
        const double A2 = tb.A[i] * tb.A[i];
        const double P = symbol_p(s.t, f);
        const double rate = tb.rate[i];
        const double mM2 = std::pow(tb.m[i] * tb.M[i], 2);
        e.E_neq += w * A2 * slot_e;
        e.F_neq += w * A2 * (p.nu * P + rate) * slot_e;
        e.AX2 += w * A2 * x2;
        e.AX2_diss += w * A2 * (p.nu * P + rate) * x2;
        e.mMX2 += w * mM2 * x2;
        e.mMgradX2 += w * mM2 * P * x2;
        e.mdotMX2 += w * rate * mM2 * x2;
    }
    if (!std::isfinite(e.worst_sandwich)) e.worst_sandwich = 0.0;
    return e;
}

EnergyTerms energy_functionals(const FlowState& s, const MultiplierTable& tb, const PhysParams& p, double r) {
    return energy_functionals(s, good_unknowns(s, p), tb, p, r);
}

// ---------------------------------------------------------------- zero modes

Field2D zero_mode_u2(const FlowState& s) {
    Field2D f = Field2D::zeros(s.lat.ny, s.lat.nz, s.lat.Ly);
    for (int in = 0; in < s.lat.ny; ++in)
        for (int il = 0; il < s.lat.nz; ++il) f.data[f.index(in, il)] = s.U2[s.lat.index(0, in, il)];
    return f;
}

Field2D simple_zero_u3(const FlowState& s) {
    Field2D f = Field2D::zeros(s.lat.ny, s.lat.nz, s.lat.Ly);
    for (int in = 0; in < s.lat.ny; ++in)
        for (int il = 1; il < s.lat.nz; ++il) f.data[f.index(in, il)] = s.U3[s.lat.index(0, in, il)];
    return f;
}

double zero_mode_aniso_norm(const FlowState& s, double sreg) {
    double acc = 0.0;
    for (int c = 0; c < 4; ++c)
        for (int in = 0; in < s.lat.ny; ++in)
            for (int il = 0; il < s.lat.nz; ++il) {
                const cplx v = s.field(c)[s.lat.index(0, in, il)];
                if (v == cplx(0.0)) continue;
                const double eta = s.lat.eta_of(in), l = s.lat.l_of(il);
                acc += std::pow(1.0 + eta * eta + l * l, sreg) * std::sqrt(1.0 + l * l) * std::norm(v);
            }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------- runs

namespace {

double l2(const SpectralField& f, std::size_t start) {
    double s = 0.0;
    for (std::size_t i = start; i < f.size(); ++i) s += std::norm(f[i]);
    return s;
}

long steps_for(double span, double dt, const char* what) {
    const double q = span / dt;
    const long n = std::lround(q);
    if (std::abs(q - n) > 1e-6 * std::max(1.0, q)) {
        std::ostringstream os;
        os << what << " (" << span << ") is not a multiple of dt (" << dt << ")";
        throw InvalidParams(os.str());
    }
    return n;
}

}  // namespace

RunResult run_simulation(const FlowState& init, const PhysParams& p, const SimOptions& opt) {
    if (!(opt.t_end > 0.0)) throw InvalidParams("run needs t_end > 0");
    if (!(opt.diag_every > 0.0)) throw InvalidParams("run needs diag_every > 0");
    const Lattice& lat = init.lat;
    Simulator sim(lat, p, opt.dynamics);
    sim.nan_dump_path = opt.nan_dump_path;
    FlowState s = init;
    if (opt.dynamics == Dynamics::Linear) sim.set_active_from(s);

    RunResult res;
    double dt = opt.dt;
    if (dt <= 0.0) {
        dt = std::min(0.01, sim.cfl_limit(s));
        // snap to a divisor of the diagnostic interval
        dt = opt.diag_every / std::ceil(opt.diag_every / dt - 1e-12);
    }
    res.dt = dt;
    const long diag_stride = steps_for(opt.diag_every, dt, "diag_every");
    const long nsteps = steps_for(opt.t_end, dt, "t_end");
    long snap_stride = 0;
    if (opt.snapshot_every > 0.0) {
        snap_stride = steps_for(opt.snapshot_every, dt, "snapshot_every");
        if (opt.snapshot_dir.empty()) throw InvalidParams("snapshot_every set without snapshot_dir");
        std::filesystem::create_directories(opt.snapshot_dir);
    }

    res.energy = opt.energy && p.has_lambda() && p.beta / (p.beta - 1.0) > 0.0 && p.nu > 0.0;
    std::unique_ptr<MultiplierTracker> tracker;
    const std::size_t slab = std::size_t(lat.ny) * lat.nz;
    if (res.energy) {
        std::vector<char> act(lat.size(), 0);
        for (std::size_t i : sim.active()) act[i] = i >= slab;
        tracker = std::make_unique<MultiplierTracker>(lat, p, opt.kappa, act);
        const GoodUnknowns g0 = good_unknowns(s, p);
        res.init_norm_r_half = hr_norm2(g0.Q, lat, opt.r + 0.5, true) + hr_norm2(g0.K, lat, opt.r + 0.5, true) +
                               hr_norm2(g0.H, lat, opt.r + 0.5, true);
    }
    const double Cs = p.has_lambda() ? (2.0 * std::sqrt(p.b_beta()) + 1.0) / (2.0 * std::sqrt(p.b_beta()) - 1.0) : 0.0;
    const double lam_rate = p.has_lambda() ? p.lambda() * std::cbrt(p.nu) : 0.0;

    double intF = 0.0, intGrad = 0.0, intDot = 0.0, intAX = 0.0, intAXd = 0.0;
    EnergyTerms prev{};
    double prev_t = 0.0, AX0 = 0.0;
    bool have_prev = false;

    auto record = [&]() {
        DiagRow row;
        row.t = s.t;
        const double u_neq = l2(s.U1, slab) + l2(s.U2, slab) + l2(s.U3, slab);
        const double th_neq = l2(s.Theta, slab);
        row.norm_Uneq = std::sqrt(u_neq);
        row.norm_Theta_neq = std::sqrt(th_neq);
        row.norm_neq = std::sqrt(u_neq + th_neq);
        row.norm_U2neq_weighted = std::sqrt(1.0 + s.t * s.t) * std::sqrt(l2(s.U2, slab));
        row.norm_total = std::sqrt(l2(s.U1, 0) + l2(s.U2, 0) + l2(s.U3, 0) + l2(s.Theta, 0));
        double u1s = 0.0;
        for (int in = 0; in < lat.ny; ++in)
            for (int il = 1; il < lat.nz; ++il) u1s += std::norm(s.U1[lat.index(0, in, il)]);
        row.norm_u1_simple = std::sqrt(u1s);
        row.div_residual = divergence_residual(s);
        res.max_div_residual = std::max(res.max_div_residual, row.div_residual);
        if (opt.sup_norms) {
            row.sup_u02 = sup_norm(zero_mode_u2(s), 2);
            row.sup_u03tilde = sup_norm(simple_zero_u3(s), 2);
        }
        if (res.energy) {
            tracker->advance_to(s.t);
            const EnergyTerms e = energy_functionals(s, tracker->table(), p, opt.r);
            row.E_neq = e.E_neq;
            row.F_neq = e.F_neq;
            if (have_prev) {
                const double h = s.t - prev_t;
                intF += 0.5 * h * (prev.F_neq + e.F_neq);
                intGrad += 0.5 * h * (prev.mMgradX2 + e.mMgradX2);
                intDot += 0.5 * h * (prev.mdotMX2 + e.mdotMX2);
                intAX += 0.5 * h * (prev.AX2 + e.AX2);
                intAXd += 0.5 * h * (prev.AX2_diss + e.AX2_diss);
            } else {
                AX0 = e.AX2;
            }
            row.int_F = intF;
            row.printed_lhs = e.mMX2 + 0.5 * p.nu * intGrad + 0.5 * intDot;
            row.printed_rhs = Cs * std::exp(-2.0 * lam_rate * s.t) * res.init_norm_r_half;
            row.weighted_lhs = e.AX2 + intAXd;
            row.weighted_rhs = Cs * AX0 + std::cbrt(p.nu) / 8.0 * intAX;
            prev = e;
            prev_t = s.t;
            have_prev = true;
        }
        res.rows.push_back(row);
    };

    auto snapshot = [&](long idx) {
        std::ostringstream name;
        name << opt.snapshot_dir << "/snap_" << idx << ".bqss";
        write_snapshot(name.str(), s);
    };

    record();
    if (snap_stride) snapshot(0);
    for (long n = 1; n <= nsteps; ++n) {
        sim.step(s, dt);
        s.t = n * dt;   // avoid drift of the accumulated time
        if (opt.div_every_step) res.max_div_residual = std::max(res.max_div_residual, divergence_residual(s));
        if (n % diag_stride == 0) record();
        if (snap_stride && n % snap_stride == 0) snapshot(n / snap_stride);
    }
    res.final_state = s;
    return res;
}

RateFit exponential_rate_fit(const std::vector<std::pair<double, double>>& series,
                             std::pair<double, double> window) {
    std::vector<std::pair<double, double>> lin;
    for (const auto& [t, v] : series) {
        if (t < window.first || t > window.second) continue;
        if (!(v > 0.0)) throw InsufficientSamples("exponential_rate_fit: non-positive sample");
        lin.emplace_back(t, std::log(v));
    }
    const int n = int(lin.size());
    if (n < 8) throw InsufficientSamples("exponential_rate_fit: need 8 samples, have " + std::to_string(n));
    double mx = 0.0, my = 0.0;
    for (auto& [x, y] : lin) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (auto& [x, y] : lin) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    RateFit f;
    const double slope = sxy / sxx;
    f.rate = -slope;
    double sse = 0.0;
    for (auto& [x, y] : lin) {
        const double r = y - (my + slope * (x - mx));
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.samples = n;
    return f;
}

EnergyReport diagnostics(const RunResult& run, std::pair<double, double> window) {
    EnergyReport rep;
    std::vector<std::pair<double, double>> su, sth, sn, z2, z3;
    const double n0 = run.rows.empty() ? 0.0 : run.rows.front().norm_total;
    for (const DiagRow& r : run.rows) {
        su.emplace_back(r.t, r.norm_Uneq);
        sth.emplace_back(r.t, r.norm_Theta_neq);
        sn.emplace_back(r.t, r.norm_neq);
        if (r.t > 0.0) {
            z2.emplace_back(r.t, r.sup_u02);
            z3.emplace_back(r.t, r.sup_u03tilde);
        }
        rep.sup_weighted_U2 = std::max(rep.sup_weighted_U2, r.norm_U2neq_weighted);
        rep.max_u1_simple = std::max(rep.max_u1_simple, r.norm_u1_simple);
        rep.max_div_residual = std::max(rep.max_div_residual, r.div_residual);
        if (n0 > 0.0) rep.max_norm_ratio = std::max(rep.max_norm_ratio, r.norm_total / n0);
        if (run.energy && r.printed_rhs > 0.0) {
            rep.max_printed_ratio = std::max(rep.max_printed_ratio, r.printed_lhs / r.printed_rhs);
            rep.max_integrated_ratio = std::max(rep.max_integrated_ratio, (r.E_neq + r.int_F) / r.printed_rhs);
        }
        if (run.energy && r.weighted_rhs > 0.0)
            rep.max_weighted_ratio = std::max(rep.max_weighted_ratio, r.weighted_lhs / r.weighted_rhs);
    }
    auto try_rate = [&](const std::vector<std::pair<double, double>>& s, RateFit& out) {
        try {
            out = exponential_rate_fit(s, window);
        } catch (const InsufficientSamples&) {
        }
    };
    try_rate(su, rep.rate_Uneq);
    try_rate(sth, rep.rate_Theta_neq);
    try_rate(sn, rep.rate_neq);
    try {
        rep.fit_u02 = decay_fit(z2, window);
        rep.fit_u03 = decay_fit(z3, window);
        rep.zero_fit_done = true;
    } catch (const InsufficientSamples&) {
        rep.zero_fit_done = false;
    }
    return rep;
}

// ---------------------------------------------------------------- initial data

FlowState mode_data(const Lattice& lat, const std::vector<ModeSpec>& modes) {
    FlowState s = FlowState::zeros(lat);
    for (const ModeSpec& m : modes) {
        if (!lat.in_band_n(m.n) || 2 * std::abs(m.k) >= lat.nx || 2 * std::abs(m.l) >= lat.nz ||
            2 * std::abs(m.n) >= lat.ny)
            throw InvalidParams("mode_data: mode outside the lattice");
        const int ik = Lattice::slot(m.k, lat.nx), in = Lattice::slot(m.n, lat.ny), il = Lattice::slot(m.l, lat.nz);
        const std::size_t i = lat.index(ik, in, il), j = conjugate_index(lat, ik, in, il);
        const cplx v[4] = {m.u1, m.u2, m.u3, m.theta};
        for (int c = 0; c < 4; ++c) {
            if (i == j) {
                s.field(c)[i] = v[c].real();
            } else {
                s.field(c)[i] = v[c];
                s.field(c)[j] = std::conj(v[c]);
            }
        }
    }
    project(s);
    return s;
}

namespace {

// Uniform (0, 1) from raw 64-bit draws so results do not depend on the
// standard library's distribution implementations.
double unit(std::mt19937_64& g) { return (double(g() >> 11) + 0.5) * 0x1.0p-53; }

cplx normal_pair(std::mt19937_64& g) {
    const double u = unit(g), v = unit(g);
    const double r = std::sqrt(-2.0 * std::log(u));
    return {r * std::cos(2.0 * kPi * v), r * std::sin(2.0 * kPi * v)};
}

void scale_to(FlowState& s, double amplitude) {
    const double n = std::sqrt(l2(s.U1, 0) + l2(s.U2, 0) + l2(s.U3, 0) + l2(s.Theta, 0));
    if (n == 0.0) throw InvalidParams("initial data vanished");
    for (int c = 0; c < 4; ++c)
        for (cplx& v : s.field(c)) v *= amplitude / n;
}

}  // namespace

FlowState random_flow(const Lattice& lat, double amplitude, std::uint64_t seed, bool constrained,
                      double decay) {
    if (!(amplitude > 0.0)) throw InvalidParams("random_flow needs amplitude > 0");
    std::mt19937_64 gen(seed);
    FlowState s = FlowState::zeros(lat);
    const auto mask = dealias_mask(lat);
    for (int ik = 0; ik < lat.nx; ++ik)
        for (int in = 0; in < lat.ny; ++in)
            for (int il = 0; il < lat.nz; ++il) {
                const std::size_t i = lat.index(ik, in, il);
                const std::size_t j = conjugate_index(lat, ik, in, il);
                if (j < i) continue;
                const Frequency f = lat.frequency(ik, in, il);
                const double w = std::pow(1.0 + double(f.k) * f.k + f.eta * f.eta + double(f.l) * f.l, -0.5 * decay);
                for (int c = 0; c < 4; ++c) {
                    const cplx z = normal_pair(gen) * w;
                    if (!mask[i]) continue;
                    if (i == j) {
                        s.field(c)[i] = z.real();
                    } else {
                        s.field(c)[i] = z;
                        s.field(c)[j] = std::conj(z);
                    }
                }
            }
    project(s);
    if (constrained) enforce_mean_constraint(s);
    scale_to(s, amplitude);
    return s;
}

FlowState gaussian_curl_data(const Lattice& lat, int k, int l, double sigma, double amplitude,
                             double eta0) {
    if (!(sigma > 0.0)) throw InvalidParams("gaussian_curl_data needs sigma > 0");
    if (2 * std::abs(k) >= lat.nx || 2 * std::abs(l) >= lat.nz)
        throw InvalidParams("gaussian_curl_data: mode outside the lattice");
    std::vector<cplx> g(lat.ny), gh(lat.ny);
    for (int j = 0; j < lat.ny; ++j) {
        const double y = lat.Ly / lat.ny * Lattice::mode(j, lat.ny);
        g[j] = std::exp(-y * y / (2.0 * sigma * sigma)) * std::cos(eta0 * y);
    }
    Fft1D fy(lat.ny);
    fy.forward(g.data(), gh.data());
    const double a[3] = {1.0, 0.5, -0.7};
    const double at = 0.8;
    FlowState s = FlowState::zeros(lat);
    for (int sign : {1, -1}) {
        const int kk = sign * k, ll = sign * l;
        const int ik = Lattice::slot(kk, lat.nx), il = Lattice::slot(ll, lat.nz);
        for (int in = 0; in < lat.ny; ++in) {
            const std::size_t i = lat.index(ik, in, il);
            const double xi[3] = {double(kk), lat.eta_of(in), double(ll)};
            const double gn = gh[in].real();
            const double A[3] = {0.5 * a[0] * gn, 0.5 * a[1] * gn, 0.5 * a[2] * gn};
            s.U1[i] = cplx(0.0, xi[1] * A[2] - xi[2] * A[1]);
            s.U2[i] = cplx(0.0, xi[2] * A[0] - xi[0] * A[2]);
            s.U3[i] = cplx(0.0, xi[0] * A[1] - xi[1] * A[0]);
            s.Theta[i] = 0.5 * at * gn;
        }
        if (k == 0 && l == 0) break;
    }
    scale_to(s, amplitude);
    return s;
}

// ---------------------------------------------------------------- snapshots

namespace {

template <class T>
void put(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    unsigned char b[sizeof(T)];
    is.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!is) throw IOError("truncated snapshot");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

void write_snapshot(const std::string& path, const FlowState& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IOError("cannot open " + path + " for writing");
    os.write("BQSS", 4);
    put<std::uint32_t>(os, kSnapshotVersion);
    put<std::uint32_t>(os, std::uint32_t(s.lat.nx));
    put<std::uint32_t>(os, std::uint32_t(s.lat.ny));
    put<std::uint32_t>(os, std::uint32_t(s.lat.nz));
    put<double>(os, s.lat.Ly);
    put<double>(os, s.t);
    for (int c = 0; c < 4; ++c)
        for (const cplx& v : s.field(c)) {
            put<double>(os, v.real());
            put<double>(os, v.imag());
        }
    if (!os) throw IOError("write failed for " + path);
}

FlowState read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IOError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BQSS", 4) != 0) throw IOError(path + " is not a BQSS snapshot");
    const auto ver = get<std::uint32_t>(is);
    if (ver != kSnapshotVersion) throw IOError("unsupported snapshot version " + std::to_string(ver));
    const int nx = int(get<std::uint32_t>(is)), ny = int(get<std::uint32_t>(is)), nz = int(get<std::uint32_t>(is));
    const double Ly = get<double>(is);
    FlowState s = FlowState::zeros(Lattice::make(nx, ny, nz, Ly));
    s.t = get<double>(is);
    for (int c = 0; c < 4; ++c)
        for (cplx& v : s.field(c)) {
            const double re = get<double>(is);
            const double im = get<double>(is);
            v = {re, im};
        }
    return s;
}

}  // namespace bqs
