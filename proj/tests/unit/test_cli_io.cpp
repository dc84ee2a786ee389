#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bqs/cli_io.hpp"
#include "bqs/errors.hpp"

using namespace bqs;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string tmpdir(const char* name) {
    const auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(d);
    return d.string();
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig c = parse_config("nu = 0.02  # viscosity\n\nalpha=1.5\nbeta = 3\nmode = dispersion\nseed = 99\n");
    CHECK(c.params.nu == 0.02);
    CHECK(c.params.alpha == 1.5);
    CHECK(c.params.beta == 3.0);
    CHECK(c.mode == RunMode::Dispersion);
    CHECK(c.seed == 99u);

    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("nu_typo = 1\n").find("nu_typo") != std::string::npos);
    CHECK(message("alpha = abc\n").find("alpha") != std::string::npos);
    CHECK(message("mode = fly\n").find("mode") != std::string::npos);
    CHECK(message("just text\n").find("line 1") != std::string::npos);
}

TEST_CASE("bound mode rejects B_beta <= 1/4") {
    RunConfig c = parse_config("beta = 0.5\nmode = simulate-linear\n");
    try {
        validate(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("B_beta") != std::string::npos);
    }
    c.bounds = false;
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("derived constants are echoed") {
    RunConfig c;
    const auto j = nlohmann::json::parse(derived_constants_json(c, 0.01));
    for (const char* k : {"B_beta", "q", "lambda", "c_alpha", "sandwich", "kappa", "window_W", "dt"}) CHECK(j.contains(k));
    CHECK(j["B_beta"].get<double>() == 2.0);
    CHECK(j["dt"].get<double>() == 0.01);
}

TEST_CASE("golden: empty series is header only") {
    CHECK(format_csv({}) == slurp(BQS_GOLDEN_DIR "/empty.csv"));
}

TEST_CASE("golden: synthetic two-point series") {
    DiagRow a, b;
    a.t = 0.0;
    a.E_neq = 1.0;
    a.F_neq = 0.5;
    a.norm_Uneq = 0.25;
    a.norm_U2neq_weighted = 0.125;
    a.norm_Theta_neq = 2.0;
    a.sup_u02 = 0.1;
    a.sup_u03tilde = 1e-20;
    b.t = 0.5;
    b.E_neq = 0.75;
    b.F_neq = 1.0 / 3.0;
    b.norm_Uneq = 3.0;
    b.norm_U2neq_weighted = -0.0;
    b.norm_Theta_neq = 1e300;
    b.sup_u02 = 123456789.0;
    b.sup_u03tilde = 0.0;
    CHECK(format_csv({a, b}) == slurp(BQS_GOLDEN_DIR "/two_point.csv"));
}

TEST_CASE("golden: end-to-end linear run, byte-identical on rerun") {
    RunConfig c = load_config(BQS_GOLDEN_DIR "/linear_small.cfg");
    c.mode = RunMode::SimulateLinear;
    c.out = tmpdir("bqs_golden_a");
    std::ostringstream log;
    CHECK(run(c, log) == 0);
    const std::string first = slurp(c.out + "/series.csv");
    CHECK(first == slurp(BQS_GOLDEN_DIR "/linear_small.csv"));
    c.out = tmpdir("bqs_golden_b");
    CHECK(run(c, log) == 0);
    CHECK(slurp(c.out + "/series.csv") == first);
    const auto rep = nlohmann::json::parse(slurp(c.out + "/report.json"));
    CHECK(rep.contains("constants"));
    CHECK(rep["constants"]["B_beta"].get<double>() == 2.0);
}

TEST_CASE("dispersion mode flags q = 0 and skips the fit") {
    RunConfig c = parse_config("alpha = 1.4142135623730951\nbeta = 2\nnu = 0\nmode = dispersion\ndisp_ny = 512\ndisp_Ly = 60\ndisp_samples = 10\n");
    c.out = tmpdir("bqs_disp_deg");
    std::ostringstream log;
    CHECK(run(c, log) == 0);
    const auto j = nlohmann::json::parse(slurp(c.out + "/dispersion.json"));
    CHECK(j["degenerate"].get<bool>());
    CHECK(j["fit"].is_null());
}

TEST_CASE("emit_plotdata reports IO failures") {
    CHECK_THROWS_AS(emit_plotdata({}, "/proc/definitely/not/writable.csv"), IOError);
}
