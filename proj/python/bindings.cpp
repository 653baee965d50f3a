// JSON crosses the boundary as text; the Python package decodes it.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fbharness/dataset.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/feedback_model.hpp"
#include "fbharness/oracle.hpp"
#include "fbharness/pipeline.hpp"
#include "fbharness/registry.hpp"
#include "fbharness/response.hpp"

namespace py = pybind11;
using fbh::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw fbh::ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

class Tables {
 public:
  explicit Tables(const std::string& domain)
      : env_(fbh::shared_environment(domain)), t_(fbh::solve(env_)) {}

  std::size_t size() const { return t_.size(); }
  std::string summary() const {
    return json{{"domain", env_->name()},
                {"states", t_.size()},
                {"solvable_nonterminal", t_.solvable_nonterminal_count()},
                {"max_distance", t_.max_distance()}}
        .dump();
  }
  std::vector<std::string> actions() const {
    auto a = env_->action_names();
    return {a.begin(), a.end()};
  }
  std::string initial_states() const {
    json out = json::array();
    for (const auto& s : env_->initial_states()) out.push_back(env_->encode(s));
    return out.dump();
  }
  std::optional<int> distance(const std::string& state) const {
    const int d = t_.distance(decode(state));
    if (d == fbh::OracleTables::kUnsolvable) return std::nullopt;
    return d;
  }
  double value(const std::string& state) const { return t_.value(decode(state)); }
  double q(const std::string& state, const std::string& action) const {
    return t_.q(decode(state), id(action));
  }
  std::vector<std::string> optimal_actions(const std::string& state) const {
    std::vector<std::string> out;
    for (int a : t_.optimal_actions(decode(state))) {
      out.push_back(env_->action_name(a));
    }
    return out;
  }
  std::vector<std::string> legal_actions(const std::string& state) const {
    std::vector<std::string> out;
    for (int a : env_->legal_actions(decode(state))) {
      out.push_back(env_->action_name(a));
    }
    return out;
  }
  std::string step(const std::string& state, const std::string& action) const {
    return env_->encode(env_->step(decode(state), id(action))).dump();
  }
  std::string render(const std::string& state, bool egocentric) const {
    return env_->render_observation(decode(state), egocentric);
  }
  std::string build(const std::string& spec_text) const {
    json spec_json = parse(spec_text);
    spec_json["domain"] = env_->name();
    const auto res = fbh::build(t_, fbh::DatasetSpec::from_json(spec_json));
    return fbh::to_jsonl(res.snapshots);
  }
  std::string prompt(const std::string& snapshot,
                     const std::string& condition) const {
    const auto snap = fbh::snapshot_from_json(parse(snapshot));
    return fbh::PromptBuilder(*env_, &t_)
        .build(snap, fbh::ConditionSet::from_json(parse(condition)))
        .text;
  }

 private:
  fbh::State decode(const std::string& s) const { return env_->decode(parse(s)); }
  int id(const std::string& action) const {
    return fbh::action_id(*env_, action);
  }

  std::shared_ptr<const fbh::Environment> env_;
  fbh::OracleTables t_;
};

std::string parse_feedback(const std::string& snapshot, const std::string& raw) {
  const auto snap = fbh::snapshot_from_json(parse(snapshot));
  const auto env = fbh::shared_environment(snap.domain);
  const auto p = fbh::parse_feedback(snap.kind, raw, snap, *env);
  const auto sc = fbh::score(p, snap);
  return json{{"error", p.error ? json(fbh::to_string(*p.error)) : json(nullptr)},
              {"parsed", p.to_json()},
              {"correct", sc.correct}}
      .dump();
}

std::string query(const std::string& model, const std::string& snapshot,
                  const std::string& condition) {
  const auto snap = fbh::snapshot_from_json(parse(snapshot));
  const auto env = fbh::shared_environment(snap.domain);
  const auto m = fbh::make_model(parse(model));
  const auto bundle = fbh::PromptBuilder(*env).build(
      snap, fbh::ConditionSet::from_json(parse(condition)));
  return m->query(bundle, fbh::QueryContext{snap, *env});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the feedback-model evaluation harness";

  py::register_exception<fbh::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<fbh::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<fbh::TransportError>(m, "TransportError",
                                              PyExc_ConnectionError);

  m.def("domains", &fbh::domain_names);

  py::class_<Tables>(m, "Tables")
      .def(py::init<const std::string&>(), py::arg("domain"),
           py::call_guard<py::gil_scoped_release>())
      .def("__len__", &Tables::size)
      .def("summary", &Tables::summary)
      .def("actions", &Tables::actions)
      .def("initial_states", &Tables::initial_states)
      .def("distance", &Tables::distance)
      .def("value", &Tables::value)
      .def("q", &Tables::q)
      .def("optimal_actions", &Tables::optimal_actions)
      .def("legal_actions", &Tables::legal_actions)
      .def("step", &Tables::step)
      .def("render", &Tables::render, py::arg("state"),
           py::arg("egocentric") = false)
      .def("build", &Tables::build, py::call_guard<py::gil_scoped_release>())
      .def("prompt", &Tables::prompt, py::arg("snapshot"),
           py::arg("condition") = "{}");

  m.def("parse_feedback", &parse_feedback);
  m.def("oracle_answer", [](const std::string& snapshot) {
    return fbh::oracle_answer(fbh::snapshot_from_json(parse(snapshot)));
  });
  m.def("query", &query, py::arg("model"), py::arg("snapshot"),
        py::arg("condition") = "{}");

  m.def("run_gen", [](const std::string& config) {
    return fbh::cmd_gen(fbh::RunConfig::from_json(parse(config))).dump();
  }, py::call_guard<py::gil_scoped_release>());
  m.def("run_eval", [](const std::string& config, std::size_t stop_after) {
    fbh::EvalOptions opt;
    if (stop_after > 0) opt.stop_after = stop_after;
    json out = json::array();
    for (const auto& r : fbh::cmd_eval(fbh::RunConfig::from_json(parse(config)), opt)) {
      out.push_back({{"dataset", r.dataset},
                     {"condition", r.condition},
                     {"model", r.model},
                     {"skipped", r.skipped},
                     {"total", r.summary.total},
                     {"resumed", r.summary.resumed},
                     {"written", r.summary.written},
                     {"complete", r.summary.complete}});
    }
    return out.dump();
  }, py::arg("config"), py::arg("stop_after") = 0,
     py::call_guard<py::gil_scoped_release>());
  m.def("run_report", [](const std::string& output_dir, const std::string& baseline) {
    return fbh::cmd_report(output_dir, baseline).to_json().dump();
  }, py::arg("output_dir"), py::arg("baseline") = "baseline",
     py::call_guard<py::gil_scoped_release>());
  m.def("verbalize", [](const std::string& dataset, const std::string& id,
                        const std::string& condition) {
    return fbh::cmd_verbalize(dataset, id,
                              fbh::ConditionSet::from_json(parse(condition)));
  }, py::arg("dataset"), py::arg("snapshot_id"), py::arg("condition") = "{}");
}
