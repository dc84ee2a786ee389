#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bqs/acceptance.hpp"
#include "bqs/dispersion.hpp"
#include "bqs/errors.hpp"
#include "bqs/linear_zero_modes.hpp"
#include "bqs/multipliers.hpp"
#include "bqs/simulator.hpp"

namespace py = pybind11;
using namespace bqs;

namespace {

py::array_t<cplx> to_array(const Mat3& m) {
    py::array_t<cplx> a({3, 3});
    auto r = a.mutable_unchecked<2>();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = m[i][j];
    return a;
}

py::dict row_dict(const DiagRow& r) {
    py::dict d;
    d["t"] = r.t;
    d["E_neq"] = r.E_neq;
    d["F_neq"] = r.F_neq;
    d["norm_Uneq"] = r.norm_Uneq;
    d["norm_U2neq_weighted"] = r.norm_U2neq_weighted;
    d["norm_Theta_neq"] = r.norm_Theta_neq;
    d["sup_u02"] = r.sup_u02;
    d["sup_u03tilde"] = r.sup_u03tilde;
    d["norm_total"] = r.norm_total;
    d["div_residual"] = r.div_residual;
    return d;
}

py::array_t<cplx> field_array(const SpectralField& f, const Lattice& lat) {
    py::array_t<cplx> a({lat.nx, lat.ny, lat.nz});
    std::copy(f.begin(), f.end(), a.mutable_data());
    return a;
}

}  // namespace

PYBIND11_MODULE(_bqs, m) {
    m.doc() = "Boussinesq shear-flow spectral toolkit";

    py::register_exception<Error>(m, "BqsError", PyExc_RuntimeError);

    py::class_<PhysParams>(m, "PhysParams")
        .def(py::init(&PhysParams::make), py::arg("nu"), py::arg("alpha"), py::arg("beta"))
        .def_readonly("nu", &PhysParams::nu)
        .def_readonly("alpha", &PhysParams::alpha)
        .def_readonly("beta", &PhysParams::beta)
        .def_property_readonly("B", &PhysParams::b_beta)
        .def_property_readonly("q", &PhysParams::q)
        .def_property_readonly("lam", &PhysParams::lambda)
        .def_property_readonly("c_alpha", &PhysParams::c_alpha)
        .def("__repr__", [](const PhysParams& p) {
            return "PhysParams(nu=" + std::to_string(p.nu) + ", alpha=" + std::to_string(p.alpha) +
                   ", beta=" + std::to_string(p.beta) + ")";
        });

    py::class_<Frequency>(m, "Frequency")
        .def(py::init([](int k, double eta, int l) { return Frequency{k, eta, l}; }), py::arg("k"),
             py::arg("eta"), py::arg("l"))
        .def_readwrite("k", &Frequency::k)
        .def_readwrite("eta", &Frequency::eta)
        .def_readwrite("l", &Frequency::l);

    py::class_<Lattice>(m, "Lattice")
        .def(py::init(&Lattice::make), py::arg("nx"), py::arg("ny"), py::arg("nz"), py::arg("Ly"))
        .def_readonly("nx", &Lattice::nx)
        .def_readonly("ny", &Lattice::ny)
        .def_readonly("nz", &Lattice::nz)
        .def_readonly("Ly", &Lattice::Ly);

    m.def("symbol_p", &symbol_p, py::arg("t"), py::arg("f"));
    m.def("symbol_ph", &symbol_ph, py::arg("t"), py::arg("f"));

    m.def("h_dispersion", &h_dispersion, py::arg("p"), py::arg("eta"), py::arg("l"));
    m.def("eigenvalues", &eigenvalues, py::arg("p"), py::arg("eta"), py::arg("l"));
    m.def("zero_mode_generator",
          [](const PhysParams& p, double eta, int l) { return to_array(zero_mode_generator(p, eta, l)); },
          py::arg("p"), py::arg("eta"), py::arg("l"));
    m.def("simple_zero_propagator",
          [](const PhysParams& p, double eta, int l, double t) {
              return to_array(simple_zero_propagator(p, eta, l, t));
          },
          py::arg("p"), py::arg("eta"), py::arg("l"), py::arg("t"));
    m.def("double_zero_propagator",
          [](const PhysParams& p, double eta, double t, cplx u1, cplx u3, cplx theta) {
              const auto s = double_zero_propagator(p, eta, t, {u1, u3, theta});
              return py::make_tuple(s.u1, s.u3, s.theta);
          },
          py::arg("p"), py::arg("eta"), py::arg("t"), py::arg("u1"), py::arg("u3"), py::arg("theta"));

    m.def("critical_window", &critical_window, py::arg("nu"));
    m.def("m_exact", &m_exact, py::arg("t"), py::arg("f"), py::arg("nu"));
    m.def("m_ode_oracle", &m_ode_oracle, py::arg("t"), py::arg("f"), py::arg("nu"), py::arg("tol") = 1e-10);
    m.def("m_star_exact", &m_star_exact, py::arg("t"), py::arg("k"), py::arg("eta"), py::arg("nu"));
    m.def("cross_operator_G", &cross_operator_G, py::arg("t"), py::arg("f"), py::arg("p"));
    m.def("ghost_multiplier", &ghost_multiplier, py::arg("j"), py::arg("t"), py::arg("f"), py::arg("p"),
          py::arg("kappa") = default_kappa(), py::arg("tol") = 1e-10);
    m.def("verify_bounds_sampled",
          [](const PhysParams& p, double kappa, int samples, unsigned long long seed) {
              return verify_bounds_sampled(p, kappa, samples, seed).to_json();
          },
          py::arg("p"), py::arg("kappa") = default_kappa(), py::arg("samples") = 1000, py::arg("seed") = 1,
          "JSON report of the multiplier bounds");

    m.def("phase",
          [](double xi, double y, int l, double t, const PhysParams& p) {
              return phase(xi, PhaseContext::make(y, l, t, p));
          },
          py::arg("xi"), py::arg("y"), py::arg("l"), py::arg("t"), py::arg("p"));
    m.def("dispersive_decay",
          [](const PhysParams& p, int ny, int nz, double Ly, double sigma, int l, const std::vector<double>& times,
             std::pair<double, double> window) {
              const auto s = dispersive_decay(p, gaussian_data(ny, nz, Ly, sigma, l), times, window);
              py::dict d;
              d["series"] = s.series;
              d["degenerate"] = s.degenerate;
              if (!s.degenerate) {
                  d["exponent"] = s.fit.exponent;
                  d["r2"] = s.fit.r2;
              }
              return d;
          },
          py::arg("p"), py::arg("ny"), py::arg("nz"), py::arg("Ly"), py::arg("sigma"), py::arg("l"),
          py::arg("times"), py::arg("window"));

    py::class_<FlowState>(m, "FlowState")
        .def_readonly("t", &FlowState::t)
        .def_readonly("lattice", &FlowState::lat)
        .def("field", [](const FlowState& s, int c) { return field_array(s.field(c), s.lat); }, py::arg("c"),
             "coefficients (k, n, l) of U1, U2, U3, Theta for c = 0..3");
    m.def("random_flow", &random_flow, py::arg("lattice"), py::arg("amplitude"), py::arg("seed"),
          py::arg("constrained") = true, py::arg("decay") = 4.0);
    m.def("divergence_residual", &divergence_residual, py::arg("state"));
    m.def("simulate",
          [](const FlowState& init, const PhysParams& p, bool nonlinear, double t_end, double dt, double diag_every,
             bool energy) {
              SimOptions opt;
              opt.dynamics = nonlinear ? Dynamics::Nonlinear : Dynamics::Linear;
              opt.t_end = t_end;
              opt.dt = dt;
              opt.diag_every = diag_every;
              opt.energy = energy;
              RunResult r;
              {
                  py::gil_scoped_release nogil;
                  r = run_simulation(init, p, opt);
              }
              py::list rows;
              for (const auto& row : r.rows) rows.append(row_dict(row));
              return py::make_tuple(rows, r.final_state);
          },
          py::arg("init"), py::arg("p"), py::arg("nonlinear") = false, py::arg("t_end") = 1.0, py::arg("dt") = 0.0,
          py::arg("diag_every") = 0.5, py::arg("energy") = true, "returns (diagnostic rows, final state)");

    m.def("run_acceptance",
          [](const std::vector<int>& ids) {
              std::vector<CriterionResult> res;
              {
                  py::gil_scoped_release nogil;
                  res = run_acceptance(ids);
              }
              return acceptance_json(res);
          },
          py::arg("ids") = std::vector<int>{}, "JSON summary of the selected criteria");
}
