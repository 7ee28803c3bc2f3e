#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ecop/cmdp.hpp"
#include "ecop/config.hpp"
#include "ecop/envs.hpp"
#include "ecop/loss.hpp"
#include "ecop/oracle.hpp"
#include "ecop/serialize.hpp"
#include "ecop/train.hpp"

namespace py = pybind11;
using namespace ecop;

namespace {

// training records flattened into plain lists; cheap at these sizes and keeps
// the python side free of custom types
py::dict records_to_dict(const TrainResult& res) {
  py::list episode, j, j_costs, lambda_max, beta, loss, feasible;
  for (const auto& r : res.records) {
    episode.append(r.episode);
    j.append(r.j_reward);
    py::list costs, lams;
    for (int i = 0; i < r.j_costs.size(); ++i) costs.append(r.j_costs[i]);
    for (int i = 0; i < r.lambda_max.size(); ++i) lams.append(r.lambda_max[i]);
    j_costs.append(costs);
    lambda_max.append(lams);
    beta.append(r.beta);
    loss.append(r.loss);
    feasible.append(r.feasible);
  }
  py::dict out;
  out["episode"] = episode;
  out["j"] = j;
  out["j_costs"] = j_costs;
  out["lambda_max"] = lambda_max;
  out["beta"] = beta;
  out["loss"] = loss;
  out["feasible"] = feasible;
  out["aborted"] = res.aborted;
  out["abort_message"] = res.abort_message;
  out["params"] = res.policy.params().values;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "episodic constrained policy optimization core";

  py::class_<EpisodicCmdp>(m, "EpisodicCmdp")
      .def_readonly("name", &EpisodicCmdp::name)
      .def_readonly("num_states", &EpisodicCmdp::num_states)
      .def_readonly("num_actions", &EpisodicCmdp::num_actions)
      .def_readonly("horizon", &EpisodicCmdp::horizon)
      .def_readonly("thresholds", &EpisodicCmdp::thresholds)
      .def_property_readonly("num_costs", &EpisodicCmdp::num_costs)
      .def("validate", &EpisodicCmdp::validate)
      .def("to_text", [](const EpisodicCmdp& c) { return cmdp_to_text(c); })
      .def_static("from_text", &cmdp_from_text, py::arg("text"))
      .def_static("load", &load_cmdp, py::arg("path"))
      .def("save", [](const EpisodicCmdp& c, const std::string& p) { save_cmdp(c, p); },
           py::arg("path"));

  py::class_<PolicySequence>(m, "PolicySequence")
      .def(py::init<int, int, int>(), py::arg("horizon"), py::arg("num_states"),
           py::arg("num_actions"))
      .def("set_row",
           [](PolicySequence& pi, int h, int s, const std::vector<double>& row) {
             pi.set_row(h, s, std::span<const double>(row));
           })
      .def("validate", &PolicySequence::validate);

  py::class_<Environment>(m, "Environment")
      .def_static("by_name", &Environment::by_name, py::arg("name"))
      .def_property_readonly("name", [](const Environment& e) { return e.spec().name; })
      .def_property_readonly("horizon",
                             [](const Environment& e) { return e.spec().horizon; })
      .def_property_readonly(
          "num_constraints",
          [](const Environment& e) { return e.spec().num_constraints; })
      .def_property_readonly("thresholds",
                             [](const Environment& e) { return e.spec().thresholds; })
      .def_property_readonly("tabular", &Environment::tabular)
      .def("cmdp", &Environment::cmdp, py::return_value_policy::copy)
      .def("set_horizon", &Environment::set_horizon)
      .def("set_thresholds", &Environment::set_thresholds);

  m.def("exact_objective", &exact_objective, py::arg("cmdp"), py::arg("policy"),
        py::arg("signal") = kReward,
        "Exact finite-horizon objective of a tabular policy; signal -1 is the "
        "reward, 0.. are cost channels");

  m.def(
      "lemma1_check",
      [](const EpisodicCmdp& m_, const PolicySequence& a, const PolicySequence& b) {
        Lemma1Result r = lemma1_check(m_, a, b);
        py::dict out;
        out["lhs"] = r.lhs;
        out["rhs"] = r.rhs;
        out["abs_err"] = r.abs_err;
        return out;
      },
      py::arg("cmdp"), py::arg("pi"), py::arg("pi_prime"));

  m.def(
      "constrained_optimum_via_dual",
      [](const EpisodicCmdp& m_, int channel) {
        DualOptimumResult r = constrained_optimum_via_dual(m_, channel);
        py::dict out;
        out["feasible"] = r.feasible;
        out["j_star"] = r.j_star;
        out["lambda_star"] = r.lambda_star;
        out["j_cost_at_star"] = r.j_cost_at_star;
        return out;
      },
      py::arg("cmdp"), py::arg("channel") = 0);

  m.def("unconstrained_optimum", &unconstrained_optimum, py::arg("cmdp"),
        py::arg("signal") = kReward);

  m.def("slack_optimum", &slack_optimum, py::arg("psi"), py::arg("lambda_"),
        py::arg("beta"));
  m.def("damped_penalty", &damped_penalty, py::arg("psi"), py::arg("lambda_"),
        py::arg("beta"));

  m.def(
      "run_config",
      [](const std::string& config_text, std::uint64_t seed) {
        RunConfig cfg = parse_run_config(config_text, "<python>");
        Environment env = make_environment(cfg);
        return records_to_dict(train_run(env, cfg.train, seed));
      },
      py::arg("config_text"), py::arg("seed") = 0,
      "Parse an experiment config (same JSON schema as the CLI) and train one "
      "seed; returns the per-iteration records and final parameters");

  m.attr("REWARD") = kReward;
}
