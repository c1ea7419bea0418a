#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "qcomp/cli.hpp"
#include "qcomp/config.hpp"
#include "qcomp/evaluate.hpp"
#include "qcomp/mdp.hpp"
#include "qcomp/net_io.hpp"
#include "qcomp/score_table.hpp"
#include "qcomp/table_io.hpp"
#include "qcomp/train.hpp"

namespace py = pybind11;
using namespace qcomp;

namespace {

py::dict report_dict(const FidelityReport& r) {
  py::dict d;
  d["rmse"] = r.rmse;
  d["policy_error_pct"] = r.policy_error_pct;
  d["states"] = r.states;
  d["confusion"] = r.confusion;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qcomp, m) {
  m.doc() = "Score-table generation, compression and evaluation";

  py::register_exception<Error>(m, "QcompError", PyExc_RuntimeError);

  py::enum_<Advisory>(m, "Advisory")
      .value("COC", Advisory::COC)
      .value("WL", Advisory::WL)
      .value("WR", Advisory::WR)
      .value("SL", Advisory::SL)
      .value("SR", Advisory::SR);

  py::class_<StateVector>(m, "StateVector")
      .def(py::init([](double rho, double theta, double psi, double v_own, double v_int, double tau, Advisory a_prev) {
             return StateVector{rho, theta, psi, v_own, v_int, tau, a_prev};
           }),
           py::arg("rho"), py::arg("theta"), py::arg("psi"), py::arg("v_own"), py::arg("v_int"), py::arg("tau") = 0.0,
           py::arg("a_prev") = Advisory::COC)
      .def_readwrite("rho", &StateVector::rho)
      .def_readwrite("theta", &StateVector::theta)
      .def_readwrite("psi", &StateVector::psi)
      .def_readwrite("v_own", &StateVector::v_own)
      .def_readwrite("v_int", &StateVector::v_int)
      .def_readwrite("tau", &StateVector::tau)
      .def_readwrite("a_prev", &StateVector::a_prev)
      .def("__eq__", [](const StateVector& a, const StateVector& b) { return a == b; })
      .def("__repr__", [](const StateVector& s) {
        std::ostringstream os;
        os << "StateVector(rho=" << s.rho << ", theta=" << s.theta << ", psi=" << s.psi << ", v_own=" << s.v_own
           << ", v_int=" << s.v_int << ", tau=" << s.tau << ", a_prev=" << to_string(s.a_prev) << ")";
        return os.str();
      });

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](std::vector<double> rho, std::vector<double> theta, std::vector<double> psi, std::vector<double> v_own,
                       std::vector<double> v_int, std::vector<double> tau) {
             GridSpec g({std::move(rho), std::move(theta), std::move(psi), std::move(v_own), std::move(v_int), std::move(tau)});
             g.validate();
             return g;
           }),
           py::arg("rho"), py::arg("theta"), py::arg("psi"), py::arg("v_own"), py::arg("v_int"), py::arg("tau"))
      .def_property_readonly("num_points", &GridSpec::num_points)
      .def_property_readonly("num_states", &GridSpec::num_states)
      .def("cuts", [](const GridSpec& g, std::size_t d) { return g.all_cuts().at(d); })
      .def("state_at", &GridSpec::state_at)
      .def("nearest_state_index", [](const GridSpec& g, const StateVector& s) { return g.state_index(g.nearest(s)); });
  m.def("default_grid", &default_grid);
  m.def("uniform_angles", &uniform_angles);

  py::class_<ScoreTable>(m, "ScoreTable")
      .def(py::init([](const GridSpec& g, py::array_t<float, py::array::c_style | py::array::forcecast> scores) {
             return ScoreTable(g, std::vector<float>(scores.data(), scores.data() + scores.size()));
           }))
      .def_property_readonly("grid", &ScoreTable::grid)
      .def_property_readonly("num_states", &ScoreTable::num_states)
      .def("scores", [](const ScoreTable& t) {
        py::array_t<float> out({t.num_states(), kNumAdvisories});
        std::copy(t.scores().begin(), t.scores().end(), out.mutable_data());
        return out;
      })
      .def("row", &ScoreTable::row)
      .def("lookup", &ScoreTable::lookup_nearest)
      .def("save", [](const ScoreTable& t, const std::filesystem::path& p) { save_table(t, p); });
  m.def("load_table", &load_table);

  m.def("optimal_action", &optimal_action);
  m.def("in_coc_band", &in_coc_band);
  m.def("quantize_score", &quantize_score);
  m.def(
      "coc_penalty",
      [](const ActionScores& row, const StateVector& s, bool strip, double penalty) {
        return coc_penalty(row, s, strip ? PenaltyMode::Strip : PenaltyMode::Apply, penalty);
      },
      py::arg("row"), py::arg("state"), py::arg("strip") = false, py::arg("penalty") = kDefaultCocPenalty);
  m.def("cpa", [](const StateVector& s) {
    const CpaResult c = cpa_geometry(s);
    py::dict d;
    d["t_cpa"] = c.t_cpa;
    d["d_cpa"] = c.d_cpa;
    d["x_cpa"] = c.x_cpa;
    d["y_cpa"] = c.y_cpa;
    d["degenerate"] = c.degenerate;
    return d;
  });

  m.def(
      "generate_table",
      [](const GridSpec& grid, double discount, double tol, std::size_t threads) {
        MdpConfig cfg;
        cfg.grid = grid;
        cfg.discount = discount;
        cfg.tol = tol;
        cfg.validate();
        py::gil_scoped_release release;
        return value_iterate(cfg, threads).table;
      },
      py::arg("grid"), py::arg("discount") = 0.97, py::arg("tol") = 1e-6, py::arg("threads") = 0);

  py::class_<NetworkArray>(m, "NetworkArray")
      .def_property_readonly("num_members", [](const NetworkArray& a) { return a.members().size(); })
      .def_property_readonly("num_params", &NetworkArray::num_params)
      .def_property_readonly("coc_penalty_stripped", &NetworkArray::coc_penalty_stripped)
      .def("scores", [](const NetworkArray& a, const StateVector& s) {
        return a.restore_adjustments().apply(a.scores(s), s);
      });
  m.def("load_array", [](const std::filesystem::path& p) { return load_array(p); });

  m.def(
      "evaluate_table",
      [](const ScoreTable& pred, const ScoreTable& table) { return report_dict(evaluate_predictor(TableSource(pred), table)); },
      py::arg("predictor"), py::arg("table"));
  m.def(
      "evaluate_array",
      [](const NetworkArray& a, const ScoreTable& table) {
        return report_dict(evaluate_predictor(AdjustedSource(a, a.restore_adjustments()), table));
      },
      py::arg("array"), py::arg("table"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs a qcomp command line; returns (exit_code, stdout, stderr).");
}
