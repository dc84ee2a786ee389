#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bqs/frame_symbols.hpp"
#include "bqs/simulator.hpp"

namespace bqs {

enum class RunMode {
    ZeroModes,
    NonzeroModes,
    Multipliers,
    Dispersion,
    SimulateLinear,
    SimulateNonlinear,
    VerifyAll,
};

std::string mode_name(RunMode m);
RunMode parse_mode(const std::string& s);   // ConfigError on unknown names

// Flat "key = value" configuration; '#' starts a comment. See README for keys.
struct RunConfig {
    PhysParams params;
    Lattice lattice;
    RunMode mode = RunMode::SimulateLinear;
    std::uint64_t seed = 11;
    double amplitude = 1e-3;
    double t_end = 10.0;
    double dt = 0.0;
    double diag_every = 0.5;
    double snapshot_every = 0.0;
    std::string out = "bqs_out";
    double kappa = 1.5;
    double r = 2.0;
    bool constrained = true;
    bool bounds = true;       // multiplier/energy checks; need B_beta > 1/4
    int threads = 1;

    // initial data for the simulate modes: "random" or "gaussian"
    std::string data = "random";
    double decay = 4.0;
    int data_k = 1, data_l = 1;
    double data_sigma = 2.0, data_eta0 = 0.0;

    // zero-modes
    int eta_max = 8, l_max = 4;

    // multipliers
    int samples = 1000;

    // dispersion
    int disp_ny = 4096, disp_nz = 4;
    double disp_Ly = 400.0, disp_sigma = 0.85;
    int disp_l = 1;
    double disp_t_min = 5.0, disp_t_max = 50.0;
    int disp_samples = 32;
    int disp_pad = 4;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// ConfigError naming the offending key.
void validate(const RunConfig& cfg);

// Derived constants echoed into every report, as a JSON object string.
std::string derived_constants_json(const RunConfig& cfg, double dt = 0.0);

inline const char* kCsvHeader = "t,E_neq,F_neq,norm_Uneq,norm_U2neq_weighted,norm_Theta_neq,sup_u02,sup_u03tilde";
std::string format_csv(const std::vector<DiagRow>& rows);
// IOError on failure.
void emit_plotdata(const std::vector<DiagRow>& rows, const std::string& path);
void write_text(const std::string& path, const std::string& text);

// Executes the configured mode, writing artifacts under cfg.out. Returns the
// process exit code (verify-all: 0 iff every criterion passes).
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace bqs
