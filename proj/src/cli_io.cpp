#include "bqs/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bqs/acceptance.hpp"
#include "bqs/dispersion.hpp"
#include "bqs/errors.hpp"
#include "bqs/linear_zero_modes.hpp"
#include "bqs/multipliers.hpp"

namespace bqs {

using ojson = nlohmann::ordered_json;

namespace {

const std::pair<RunMode, const char*> kModes[] = {
    {RunMode::ZeroModes, "zero-modes"},         {RunMode::NonzeroModes, "nonzero-modes"},
    {RunMode::Multipliers, "multipliers"},      {RunMode::Dispersion, "dispersion"},
    {RunMode::SimulateLinear, "simulate-linear"}, {RunMode::SimulateNonlinear, "simulate-nonlinear"},
    {RunMode::VerifyAll, "verify-all"},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    auto dbl = [](double RunConfig::*m) {
        return Setter([m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = to_double(k, v); });
    };
    auto num = [](int RunConfig::*m) {
        return Setter([m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = int(to_int(k, v)); });
    };
    static const std::map<std::string, Setter> table = {
        {"nu", [](RunConfig& c, auto& k, auto& v) { c.params.nu = to_double(k, v); }},
        {"alpha", [](RunConfig& c, auto& k, auto& v) { c.params.alpha = to_double(k, v); }},
        {"beta", [](RunConfig& c, auto& k, auto& v) { c.params.beta = to_double(k, v); }},
        {"nx", [](RunConfig& c, auto& k, auto& v) { c.lattice.nx = int(to_int(k, v)); }},
        {"ny", [](RunConfig& c, auto& k, auto& v) { c.lattice.ny = int(to_int(k, v)); }},
        {"nz", [](RunConfig& c, auto& k, auto& v) { c.lattice.nz = int(to_int(k, v)); }},
        {"Ly", [](RunConfig& c, auto& k, auto& v) { c.lattice.Ly = to_double(k, v); }},
        {"mode", [](RunConfig& c, auto&, auto& v) { c.mode = parse_mode(v); }},
        {"seed", [](RunConfig& c, auto& k, auto& v) {
             const long long s = to_int(k, v);
             if (s < 0) throw ConfigError("key 'seed' must be non-negative");
             c.seed = std::uint64_t(s);
         }},
        {"amplitude", dbl(&RunConfig::amplitude)},
        {"t_end", dbl(&RunConfig::t_end)},
        {"dt", dbl(&RunConfig::dt)},
        {"diag_every", dbl(&RunConfig::diag_every)},
        {"snapshot_every", dbl(&RunConfig::snapshot_every)},
        {"out", [](RunConfig& c, auto&, auto& v) { c.out = v; }},
        {"kappa", dbl(&RunConfig::kappa)},
        {"r", dbl(&RunConfig::r)},
        {"constrained", [](RunConfig& c, auto& k, auto& v) { c.constrained = to_bool(k, v); }},
        {"bounds", [](RunConfig& c, auto& k, auto& v) { c.bounds = to_bool(k, v); }},
        {"threads", num(&RunConfig::threads)},
        {"data", [](RunConfig& c, auto& k, auto& v) {
             if (v != "random" && v != "gaussian") throw ConfigError("key '" + k + "': expected random or gaussian");
             c.data = v;
         }},
        {"decay", dbl(&RunConfig::decay)},
        {"data_k", num(&RunConfig::data_k)},
        {"data_l", num(&RunConfig::data_l)},
        {"data_sigma", dbl(&RunConfig::data_sigma)},
        {"data_eta0", dbl(&RunConfig::data_eta0)},
        {"eta_max", num(&RunConfig::eta_max)},
        {"l_max", num(&RunConfig::l_max)},
        {"samples", num(&RunConfig::samples)},
        {"disp_ny", num(&RunConfig::disp_ny)},
        {"disp_nz", num(&RunConfig::disp_nz)},
        {"disp_Ly", dbl(&RunConfig::disp_Ly)},
        {"disp_sigma", dbl(&RunConfig::disp_sigma)},
        {"disp_l", num(&RunConfig::disp_l)},
        {"disp_t_min", dbl(&RunConfig::disp_t_min)},
        {"disp_t_max", dbl(&RunConfig::disp_t_max)},
        {"disp_samples", num(&RunConfig::disp_samples)},
        {"disp_pad", num(&RunConfig::disp_pad)},
    };
    return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("key '" + key + "': " + what);
}

bool needs_bounds(RunMode m) {
    return m == RunMode::NonzeroModes || m == RunMode::Multipliers || m == RunMode::SimulateLinear ||
           m == RunMode::SimulateNonlinear;
}

ojson constants(const RunConfig& cfg, double dt) {
    return ojson::parse(derived_constants_json(cfg, dt));
}

ojson rows_json_tail(const std::vector<DiagRow>& rows) {
    if (rows.empty()) return nullptr;
    const DiagRow& r = rows.back();
    return {{"t", r.t}, {"E_neq", r.E_neq}, {"norm_total", r.norm_total}, {"norm_neq", r.norm_neq},
            {"div_residual", r.div_residual}};
}

ojson fit_json(const DecayFit& f) {
    return {{"exponent", f.exponent}, {"constant", f.constant}, {"r2", f.r2}, {"window", {f.t_lo, f.t_hi}},
            {"samples", f.samples}};
}

ojson rate_json(const RateFit& f) { return {{"rate", f.rate}, {"r2", f.r2}, {"samples", f.samples}}; }

FlowState initial_data(const RunConfig& cfg) {
    if (cfg.data == "gaussian")
        return gaussian_curl_data(cfg.lattice, cfg.data_k, cfg.data_l, cfg.data_sigma, cfg.amplitude, cfg.data_eta0);
    return random_flow(cfg.lattice, cfg.amplitude, cfg.seed, cfg.constrained, cfg.decay);
}

SimOptions sim_options(const RunConfig& cfg, Dynamics d) {
    SimOptions o;
    o.dynamics = d;
    o.dt = cfg.dt;
    o.t_end = cfg.t_end;
    o.diag_every = cfg.diag_every;
    o.snapshot_every = cfg.snapshot_every;
    if (cfg.snapshot_every > 0.0) o.snapshot_dir = cfg.out + "/snapshots";
    o.r = cfg.r;
    o.kappa = cfg.kappa;
    o.energy = cfg.bounds;
    o.nan_dump_path = cfg.out + "/nan_dump.bqss";
    return o;
}

ojson report_json(const RunResult& run, const EnergyReport& rep) {
    ojson j;
    j["energy_tracked"] = run.energy;
    j["rate_neq"] = rate_json(rep.rate_neq);
    j["rate_Uneq"] = rate_json(rep.rate_Uneq);
    j["rate_Theta_neq"] = rate_json(rep.rate_Theta_neq);
    j["sup_weighted_U2"] = rep.sup_weighted_U2;
    j["max_printed_ratio"] = rep.max_printed_ratio;
    j["max_weighted_ratio"] = rep.max_weighted_ratio;
    j["max_integrated_ratio"] = rep.max_integrated_ratio;
    j["max_norm_ratio"] = rep.max_norm_ratio;
    j["max_u1_simple"] = rep.max_u1_simple;
    j["max_div_residual"] = rep.max_div_residual;
    if (rep.zero_fit_done) {
        j["fit_u02"] = fit_json(rep.fit_u02);
        j["fit_u03"] = fit_json(rep.fit_u03);
    }
    j["final"] = rows_json_tail(run.rows);
    return j;
}

// Rate fits need 8 samples; fall back to the whole run when the window is short.
EnergyReport safe_diagnostics(const RunResult& run, std::ostream& log) {
    const double T = run.rows.empty() ? 0.0 : run.rows.back().t;
    try {
        return diagnostics(run, {0.2 * T, T});
    } catch (const InsufficientSamples& e) {
        log << "note: " << e.what() << "; fits skipped\n";
        EnergyReport rep;
        for (const auto& r : run.rows) {
            rep.max_printed_ratio = std::max(rep.max_printed_ratio, r.printed_rhs > 0 ? r.printed_lhs / r.printed_rhs : 0.0);
            rep.max_div_residual = std::max(rep.max_div_residual, r.div_residual);
            rep.max_u1_simple = std::max(rep.max_u1_simple, r.norm_u1_simple);
        }
        return rep;
    }
}

int run_zero_modes(const RunConfig& cfg, std::ostream& log) {
    const PhysParams& p = cfg.params;
    const double t = cfg.t_end;
    std::ostringstream csv;
    csv << "eta,l,t,rel_err,decay_rate,frequency\n";
    double worst = 0.0;
    int cases = 0;
    const Vec3 basis[3] = {Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}, Vec3{0.0, 0.0, 1.0}};
    for (int eta = -cfg.eta_max; eta <= cfg.eta_max; ++eta)
        for (int l = -cfg.l_max; l <= cfg.l_max; ++l) {
            if (l == 0) continue;
            const Mat3 M = simple_zero_propagator(p, eta, l, t);
            double dt = oracle_dt(p, eta, l);
            dt = t / std::ceil(t / dt);
            double err = 0.0;
            for (const Vec3& v : basis) {
                const Vec3 a = mat_apply(M, v), o = rk4_oracle(p, eta, l, t, dt, v);
                double d = 0.0, n = 0.0;
                for (int c = 0; c < 3; ++c) {
                    d += std::norm(a[c] - o[c]);
                    n += std::norm(o[c]);
                }
                err = std::max(err, std::sqrt(d / n));
            }
            const auto ev = eigenvalues(p, eta, l);
            worst = std::max(worst, err);
            ++cases;
            char line[160];
            std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", eta, l, t, err, -ev[1].real(),
                          std::abs(ev[1].imag()));
            csv << line;
        }
    write_text(cfg.out + "/zero_modes.csv", csv.str());
    ojson j;
    j["mode"] = "zero-modes";
    j["constants"] = constants(cfg, 0.0);
    j["cases"] = cases;
    j["t"] = t;
    j["max_rel_err"] = worst;
    write_text(cfg.out + "/zero_modes.json", j.dump(2) + "\n");
    log << "zero-modes: " << cases << " slots, max relative error vs RK4 " << worst << "\n";
    return 0;
}

int run_multipliers(const RunConfig& cfg, std::ostream& log) {
    const PhysParams& p = cfg.params;
    const BoundReport rep = verify_bounds_sampled(p, cfg.kappa, cfg.samples, cfg.seed);
    ojson j;
    j["mode"] = "multipliers";
    j["constants"] = constants(cfg, 0.0);
    j["all_passed"] = rep.all_passed();
    j["bounds"] = ojson::parse(rep.to_json());
    write_text(cfg.out + "/bounds.json", j.dump(2) + "\n");
    for (const auto& e : rep.entries)
        log << (e.asserted ? (e.passed ? "ok    " : "FAIL  ") : "fit   ") << e.name << " margin " << e.margin << "\n";
    return rep.all_passed() ? 0 : 1;
}

int run_dispersion(const RunConfig& cfg, std::ostream& log) {
    const Field2D data = gaussian_data(cfg.disp_ny, cfg.disp_nz, cfg.disp_Ly, cfg.disp_sigma, cfg.disp_l);
    std::vector<double> ts;
    const int n = cfg.disp_samples;
    for (int i = 0; i < n; ++i)
        ts.push_back(n == 1 ? cfg.disp_t_min
                            : cfg.disp_t_min * std::pow(cfg.disp_t_max / cfg.disp_t_min, double(i) / (n - 1)));
    PhysParams p = cfg.params;
    p.nu = 0.0;
    const DispersiveSeries s = dispersive_decay(p, data, ts, {cfg.disp_t_min, cfg.disp_t_max}, cfg.disp_pad);
    std::ostringstream csv;
    csv << "t,sup_norm\n";
    for (const auto& [t, v] : s.series) {
        char line[80];
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", t, v);
        csv << line;
    }
    write_text(cfg.out + "/dispersion.csv", csv.str());
    ojson j;
    j["mode"] = "dispersion";
    j["constants"] = constants(cfg, 0.0);
    j["degenerate"] = s.degenerate;
    if (s.degenerate) {
        j["fit"] = nullptr;
        j["note"] = "q = 0: the phase has no curvature, decay fit skipped";
        log << "dispersion: q = 0 degeneracy, fit skipped\n";
    } else {
        j["fit"] = fit_json(s.fit);
        log << "dispersion: exponent " << s.fit.exponent << " r2 " << s.fit.r2 << "\n";
    }
    write_text(cfg.out + "/dispersion.json", j.dump(2) + "\n");
    return 0;
}

int run_simulate(const RunConfig& cfg, Dynamics d, bool nonzero_only, std::ostream& log) {
    FlowState s = initial_data(cfg);
    if (nonzero_only) {
        for (int c = 0; c < 4; ++c) s.field(c) = project_neq(s.field(c), s.lat);
    }
    const RunResult run = run_simulation(s, cfg.params, sim_options(cfg, d));
    emit_plotdata(run.rows, cfg.out + "/series.csv");
    const EnergyReport rep = safe_diagnostics(run, log);
    ojson j;
    j["mode"] = mode_name(cfg.mode);
    j["constants"] = constants(cfg, run.dt);
    j["report"] = report_json(run, rep);
    if (nonzero_only) {
        const GoodUnknowns g = good_unknowns(s, cfg.params);
        const SpectralField U3 = u3_from_q(g, s.t, s.lat);
        const auto [U1, U2] = recover_velocity(g, U3, s.t, s.lat, cfg.params);
        double err = 0.0, big = 0.0;
        for (std::size_t i = 0; i < s.lat.size(); ++i) {
            big = std::max({big, std::abs(s.U1[i]), std::abs(s.U2[i]), std::abs(s.U3[i])});
            err = std::max({err, std::abs(U1[i] - s.U1[i]), std::abs(U2[i] - s.U2[i]), std::abs(U3[i] - s.U3[i])});
        }
        j["good_unknown_round_trip"] = big > 0.0 ? err / big : 0.0;
    }
    write_text(cfg.out + "/report.json", j.dump(2) + "\n");
    log << mode_name(cfg.mode) << ": " << run.rows.size() << " diagnostic rows, dt " << run.dt << ", max div "
        << run.max_div_residual << "\n";
    return 0;
}

int run_verify_all(const RunConfig& cfg, std::ostream& log) {
    const auto results = run_acceptance({}, 0, [&](const CriterionResult& r) { log << criterion_line(r) << "\n"; });
    write_text(cfg.out + "/acceptance.json", acceptance_json(results) + "\n");
    for (const auto& r : results)
        if (!r.passed) return 1;
    return 0;
}

}  // namespace

std::string mode_name(RunMode m) {
    for (const auto& [k, v] : kModes)
        if (k == m) return v;
    return "unknown";
}

RunMode parse_mode(const std::string& s) {
    for (const auto& [k, v] : kModes)
        if (s == v) return k;
    throw ConfigError("key 'mode': unknown mode '" + s + "'");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    const auto& table = setters();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown key '" + key + "' on line " + std::to_string(lineno));
        it->second(cfg, key, value);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IOError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate(const RunConfig& cfg) {
    const PhysParams& p = cfg.params;
    require(p.nu >= 0.0, "nu", "must be >= 0");
    require(cfg.lattice.nx >= 2 && cfg.lattice.ny >= 2 && cfg.lattice.nz >= 2, "nx/ny/nz", "must be >= 2");
    require(cfg.lattice.Ly > 0.0, "Ly", "must be > 0");
    require(cfg.t_end > 0.0, "t_end", "must be > 0");
    require(cfg.dt >= 0.0, "dt", "must be >= 0 (0 selects the default)");
    require(cfg.diag_every > 0.0, "diag_every", "must be > 0");
    require(cfg.snapshot_every >= 0.0, "snapshot_every", "must be >= 0");
    require(cfg.kappa > 0.0, "kappa", "must be > 0");
    require(cfg.r >= 0.0, "r", "must be >= 0");
    require(cfg.amplitude >= 0.0, "amplitude", "must be >= 0");
    require(cfg.threads >= 1, "threads", "must be >= 1");
    require(cfg.samples >= 1, "samples", "must be >= 1");
    require(cfg.eta_max >= 0 && cfg.l_max >= 1, "eta_max/l_max", "need eta_max >= 0 and l_max >= 1");
    require(!cfg.out.empty(), "out", "must not be empty");
    if (cfg.mode == RunMode::Dispersion) {
        require(cfg.disp_l != 0, "disp_l", "must be non-zero");
        require(cfg.disp_t_min > 0.0 && cfg.disp_t_max > cfg.disp_t_min, "disp_t_min/disp_t_max",
                "need 0 < disp_t_min < disp_t_max");
        require(cfg.disp_samples >= 8, "disp_samples", "the decay fit needs at least 8 samples");
        require(p.alpha != 0.0, "alpha", "dispersion needs alpha != 0");
    }
    if (cfg.bounds && needs_bounds(cfg.mode)) {
        std::ostringstream os;
        os << "B_beta = beta(beta - 1) = " << p.b_beta()
           << " must exceed 1/4 for the multiplier and energy checks (set bounds = false for control runs)";
        require(p.b_beta() > 0.25, "beta", os.str());
        require(p.nu > 0.0, "nu", "multiplier and energy checks need nu > 0");
    }
}

std::string derived_constants_json(const RunConfig& cfg, double dt) {
    const PhysParams& p = cfg.params;
    ojson j;
    j["nu"] = p.nu;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["B_beta"] = p.b_beta();
    j["q"] = p.alpha != 0.0 ? ojson(p.q()) : ojson(nullptr);
    j["lambda"] = p.has_lambda() ? ojson(p.lambda()) : ojson(nullptr);
    j["c_alpha"] = p.b_beta() > 0.0 ? ojson(p.c_alpha()) : ojson(nullptr);
    j["sandwich"] = p.b_beta() > 0.0 ? ojson(p.sandwich()) : ojson(nullptr);
    j["sandwich_constant"] = p.has_lambda()
                                 ? ojson((2.0 * std::sqrt(p.b_beta()) + 1.0) / (2.0 * std::sqrt(p.b_beta()) - 1.0))
                                 : ojson(nullptr);
    j["kappa"] = cfg.kappa;
    j["window_W"] = p.nu > 0.0 ? ojson(critical_window(p.nu)) : ojson(nullptr);
    j["r"] = cfg.r;
    j["dt"] = dt;
    j["lattice"] = {{"nx", cfg.lattice.nx}, {"ny", cfg.lattice.ny}, {"nz", cfg.lattice.nz}, {"Ly", cfg.lattice.Ly}};
    j["Ly_note"] = "the y-period is a numerical choice; the model domain is unbounded in y";
    j["seed"] = cfg.seed;
    j["threads_used"] = 1;
    return j.dump();
}

std::string format_csv(const std::vector<DiagRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    char line[512];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.E_neq, r.F_neq,
                      r.norm_Uneq, r.norm_U2neq_weighted, r.norm_Theta_neq, r.sup_u02, r.sup_u03tilde);
        out += line;
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::error_code ec;
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot open '" + path + "' for writing");
    f << text;
    f.flush();
    if (!f) throw IOError("write to '" + path + "' failed");
}

void emit_plotdata(const std::vector<DiagRow>& rows, const std::string& path) { write_text(path, format_csv(rows)); }

int run(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    if (cfg.threads > 1) log << "note: single-threaded build, threads = " << cfg.threads << " ignored\n";
    switch (cfg.mode) {
        case RunMode::ZeroModes: return run_zero_modes(cfg, log);
        case RunMode::NonzeroModes: return run_simulate(cfg, Dynamics::Linear, true, log);
        case RunMode::Multipliers: return run_multipliers(cfg, log);
        case RunMode::Dispersion: return run_dispersion(cfg, log);
        case RunMode::SimulateLinear: return run_simulate(cfg, Dynamics::Linear, false, log);
        case RunMode::SimulateNonlinear: return run_simulate(cfg, Dynamics::Nonlinear, false, log);
        case RunMode::VerifyAll: return run_verify_all(cfg, log);
    }
    return 2;
}

}  // namespace bqs
