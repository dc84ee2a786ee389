#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bqs/dispersion.hpp"
#include "bqs/frame_symbols.hpp"
#include "bqs/multipliers.hpp"

namespace bqs {

// Perturbation (U, Theta) in the moving frame.
struct FlowState {
    Lattice lat;
    double t = 0.0;
    SpectralField U1, U2, U3, Theta;

    static FlowState zeros(const Lattice& lat);
    SpectralField& field(int c) { return c == 0 ? U1 : c == 1 ? U2 : c == 2 ? U3 : Theta; }
    const SpectralField& field(int c) const { return c == 0 ? U1 : c == 1 ? U2 : c == 2 ? U3 : Theta; }
};

struct GoodUnknowns {
    SpectralField Q, K, H;   // zero on k = 0 slots
};

enum class Dynamics { Linear, Nonlinear };

// Index of the Hermitian partner (-k, -n, -l).
std::size_t conjugate_index(const Lattice& lat, int ik, int in, int il);

// 2/3-rule mask: keeps 3|mode| < n in every direction.
std::vector<char> dealias_mask(const Lattice& lat);
void dealias(FlowState& s);

// Leray projection at the state's time; U^2 = 0 at the xi = 0 slot (gauge).
void project(FlowState& s);
// max over slots of |xi . U| / (|xi| |U|)
double divergence_residual(const FlowState& s);
// max |c(kappa) - conj c(-kappa)| relative to the largest coefficient
double reality_defect(const FlowState& s);
// zero the (k, l) = (0, 0) slices of U^3 and Theta
void enforce_mean_constraint(FlowState& s);

// x-average projections
SpectralField project_zero(const SpectralField& f, const Lattice& lat);
SpectralField project_neq(const SpectralField& f, const Lattice& lat);

// int_{t0}^{t0+s} p(tau) d tau, exact
double viscous_integral(double t0, double s, const Frequency& f);

class Simulator {
public:
    Simulator(const Lattice& lat, const PhysParams& p, Dynamics dyn);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    // Restrict the linear update to the given slots (linear runs only); by
    // default every slot (inside the dealiasing mask for nonlinear runs).
    void set_active_from(const FlowState& s);
    const std::vector<std::size_t>& active() const { return active_; }

    // 0.2 / (alpha + |beta| + max|u| k_max)
    double cfl_limit(const FlowState& s);
    // One integrating-factor RK4 step followed by projection.
    void step(FlowState& s, double dt);
    // Written before NaNDetected is raised, if non-empty.
    std::string nan_dump_path;

private:
    using Fields = std::array<SpectralField, 4>;
    void rhs(double t, const Fields& u, Fields& out, double* umax);
    void nonlinear(double t, const Fields& u, Fields& out, double* umax);
    double xi_max(double t) const;

    Lattice lat_;
    PhysParams p_;
    Dynamics dyn_;
    std::vector<char> mask_;
    std::vector<std::size_t> active_;
    struct Work;
    std::unique_ptr<Work> w_;
};

FlowState linear_step(const FlowState& s, double dt, const PhysParams& p);
FlowState nonlinear_step(const FlowState& s, double dt, const PhysParams& p);

GoodUnknowns good_unknowns(const FlowState& s, const PhysParams& p);
// U^1, U^2 on k != 0 slots from K and U^3 (incompressibility); k = 0 slots are zero.
std::pair<SpectralField, SpectralField> recover_velocity(const GoodUnknowns& gu, const SpectralField& U3,
                                                         double t, const Lattice& lat, const PhysParams& p);
// U^3 from Q on k != 0 slots.
SpectralField u3_from_q(const GoodUnknowns& gu, double t, const Lattice& lat);

// sum over slots of <k, eta, l>^{2r} |f|^2 (eta is the moving-frame variable)
double hr_norm2(const SpectralField& f, const Lattice& lat, double r, bool nonzero_only = false);

struct EnergyTerms {
    double E_neq = 0.0;
    double F_neq = 0.0;
    double AX2 = 0.0;         // ||A X||^2_{H^r}
    double AX2_diss = 0.0;    // sum w A^2 (nu p - M'/M) |X|^2
    double mMX2 = 0.0;        // ||m M X||^2_{H^r}
    double mMgradX2 = 0.0;    // ||m M grad_L X||^2_{H^r}
    double mdotMX2 = 0.0;     // ||sqrt(-M' M) m X||^2_{H^r}
    double worst_sandwich = 0.0;   // min over slots of e / |A X|^2 - (1 - s)
};

// Throws CoercivityLost when the per-slot sandwich fails beyond 1e-10.
EnergyTerms energy_functionals(const FlowState& s, const GoodUnknowns& gu, const MultiplierTable& table,
                               const PhysParams& p, double r);
EnergyTerms energy_functionals(const FlowState& s, const MultiplierTable& table, const PhysParams& p,
                               double r);

// Field2D views of x-averaged quantities: U^2 at k = 0 and the simple-zero part of U^3.
Field2D zero_mode_u2(const FlowState& s);
Field2D simple_zero_u3(const FlowState& s);
// H^{s, s+1/2}-type norm of the k = 0 part with the extra <l>^{1/2} weight
double zero_mode_aniso_norm(const FlowState& s, double sreg);

struct DiagRow {
    double t = 0.0;
    double E_neq = 0.0;
    double F_neq = 0.0;
    double norm_Uneq = 0.0;
    double norm_U2neq_weighted = 0.0;
    double norm_Theta_neq = 0.0;
    double sup_u02 = 0.0;
    double sup_u03tilde = 0.0;
    // extra diagnostics
    double norm_total = 0.0;
    double norm_neq = 0.0;          // ||(U, Theta)_neq||
    double norm_u1_simple = 0.0;    // ||u~^1_0||
    double div_residual = 0.0;
    double int_F = 0.0;
    double printed_lhs = 0.0, printed_rhs = 0.0;
    double weighted_lhs = 0.0, weighted_rhs = 0.0;
};

struct SimOptions {
    Dynamics dynamics = Dynamics::Linear;
    double dt = 0.0;            // 0: default min(0.01, CFL)
    double t_end = 10.0;
    double diag_every = 0.5;
    double snapshot_every = 0.0;   // 0: no snapshots
    std::string snapshot_dir;
    double r = 2.0;
    double kappa = 1.5;
    bool energy = true;         // needs B > 1/4; switched off otherwise
    bool sup_norms = true;
    bool div_every_step = false;   // track the divergence residual after every step
    std::string nan_dump_path;
};

struct RunResult {
    std::vector<DiagRow> rows;
    FlowState final_state;
    double dt = 0.0;
    bool energy = false;
    double init_norm_r_half = 0.0;   // ||X_in||^2_{H^{r+1/2}}
    double max_div_residual = 0.0;
};

RunResult run_simulation(const FlowState& init, const PhysParams& p, const SimOptions& opt);

struct RateFit {
    double rate = 0.0;   // -slope of log v against t
    double r2 = 0.0;
    int samples = 0;
};
RateFit exponential_rate_fit(const std::vector<std::pair<double, double>>& series,
                             std::pair<double, double> window);

struct EnergyReport {
    RateFit rate_Uneq, rate_Theta_neq, rate_neq;
    double sup_weighted_U2 = 0.0;
    bool zero_fit_done = false;
    DecayFit fit_u02, fit_u03;
    double max_printed_ratio = 0.0;    // max printed_lhs / printed_rhs
    double max_weighted_ratio = 0.0;
    double max_integrated_ratio = 0.0;       // (E + int F) / printed_rhs
    double max_norm_ratio = 0.0;       // max norm_total / initial
    double max_u1_simple = 0.0;
    double max_div_residual = 0.0;
};

EnergyReport diagnostics(const RunResult& run, std::pair<double, double> window);

// Initial data.
struct ModeSpec {
    int k = 0, n = 0, l = 0;
    cplx u1 = 0.0, u2 = 0.0, u3 = 0.0, theta = 0.0;
};
// Sets the listed modes and their conjugates, then projects at t = 0.
FlowState mode_data(const Lattice& lat, const std::vector<ModeSpec>& modes);
// Random smooth data on the dealiased lattice with spectrum ~ <xi>^{-decay},
// scaled to l2 norm `amplitude`; constrained = zero x-z means of u^3, theta.
FlowState random_flow(const Lattice& lat, double amplitude, std::uint64_t seed, bool constrained = true,
                      double decay = 4.0);
// u = curl A with A_j = a_j cos(k x + l z) g(y), theta likewise, where
// g(y) = exp(-y^2 / (2 sigma^2)) cos(eta0 y).
FlowState gaussian_curl_data(const Lattice& lat, int k, int l, double sigma, double amplitude,
                             double eta0 = 0.0);

// Snapshot format "BQSS".
void write_snapshot(const std::string& path, const FlowState& s);
FlowState read_snapshot(const std::string& path);

}  // namespace bqs
