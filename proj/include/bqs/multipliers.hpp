#pragma once

#include <array>
#include <string>
#include <vector>

#include "bqs/frame_symbols.hpp"

namespace bqs {

// kappa/(6+6 kappa) = 1/10.
double default_kappa();

// Half-width 1000 nu^{-1/3} of the window around the critical time eta/k.
double critical_window(double nu);

// Shear multiplier m: rate -m'/m, initial value, exact formula and the
// quadrature oracle log m(t) = log m(0) - int_0^t rate.
double m_rate(double t, const Frequency& f, double nu);
double m_initial(const Frequency& f, double nu);
double m_exact(double t, const Frequency& f, double nu);
double m_ode_oracle(double t, const Frequency& f, double nu, double tol = 1e-10);

// Variant m*; m* = 1 on k = 0 by convention.
double m_star_rate(double t, int k, double eta, double nu);
double m_star_initial(int k, double eta, double nu);
double m_star_exact(double t, int k, double eta, double nu);
double m_star_ode_oracle(double t, int k, double eta, double nu, double tol = 1e-10);

// Cross operator symbol and its exact time derivative. Both vanish on k = 0.
double cross_operator_G(double t, const Frequency& f, const PhysParams& p);
double cross_operator_G_dt(double t, const Frequency& f, const PhysParams& p);

// Ghost multipliers M_1..M_7 (j is 1-based). ghost_rate returns -M_j'/M_j.
double ghost_rate(int j, double t, const Frequency& f, const PhysParams& p, double kappa);
double ghost_multiplier(int j, double t, const Frequency& f, const PhysParams& p, double kappa,
                        double tol = 1e-10);
// Sum of the seven rates, i.e. -M'/M.
double ghost_rate_total(double t, const Frequency& f, const PhysParams& p, double kappa);

double a_weight(double t, const Frequency& f, const PhysParams& p, double kappa);
double a_star(double t, const Frequency& f, const PhysParams& p, double kappa);
constexpr double kLambdaStar = 1.0 / 16.0;

struct MultiplierTable {
    double time = 0.0;
    double kappa = 1.5;
    Lattice lattice;
    std::vector<double> m;
    std::array<std::vector<double>, 7> Mj;
    std::vector<double> M, A, B;   // M = prod M_j, A = m M e^{lambda nu^{1/3} t}, B uses lambda/2
    std::vector<double> rate;      // -M'/M
    bool has_star = false;
    std::vector<double> m_star, M_star, A_star;
};

// Direct construction at time t (exact m, closed-form M_1, quadrature for
// M_2..M_7). Cost grows with the lattice; meant for verification.
MultiplierTable build_multiplier_table(const Lattice& lat, const PhysParams& p, double kappa,
                                       double t, bool with_star = false);

// Incremental version used by the simulator: keeps log M_j per slot and
// advances it with composite Gauss-Legendre panels split at eta/k.
class MultiplierTracker {
public:
    // `active` (optional, one flag per slot) restricts the work to the slots
    // that carry data; inactive slots report m = M = 1.
    MultiplierTracker(const Lattice& lat, const PhysParams& p, double kappa,
                      std::vector<char> active = {});
    void advance_to(double t);
    double time() const { return t_; }
    MultiplierTable table() const;

private:
    Lattice lat_;
    PhysParams p_;
    double kappa_;
    double t_ = 0.0;
    std::vector<char> active_;
    std::array<std::vector<double>, 7> logM_;
    bool is_active(std::size_t i) const { return active_.empty() || active_[i]; }
};

struct SlotRef {
    int k = 0;
    double eta = 0.0;
    int l = 0;
    double t = 0.0;
};

struct BoundEntry {
    std::string name;
    bool asserted = true;    // false: fitted constant, reported only
    bool passed = true;
    double margin = 0.0;     // worst slack (>= 0 means satisfied) or fitted constant
    SlotRef worst_slot;
    long samples = 0;
    std::string detail;
};

struct BoundReport {
    std::vector<BoundEntry> entries;
    bool all_passed() const;
    void throw_if_violated() const;   // BoundViolation naming the first failure
    std::string to_json() const;
};

BoundReport verify_bounds(const MultiplierTable& table, const PhysParams& p);

// Sample-based checks over random (t, k, eta, l) including the product
// estimate m(eta, l) <= C <eta - eta', l - l'>^{1/2} m(eta', l').
BoundReport verify_bounds_sampled(const PhysParams& p, double kappa, int samples,
                                  unsigned long long seed);

}  // namespace bqs
