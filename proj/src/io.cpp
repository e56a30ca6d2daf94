#include "bellfit/io.hpp"

#include <fstream>
#include <sstream>
#include <type_traits>

#include "bellfit/errors.hpp"

namespace bellfit::io {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T get(const json& j, const char* key) {
  const json& v = field(j, key);
  if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw ParseError(std::string("field '") + key + "' must be a non-negative integer");
  }
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  return j.contains(key) ? get<T>(j, key) : fallback;
}

}  // namespace

json to_json(const models::ModelSpec& s) {
  return json{{"class", models::to_string(s.cls)}, {"d", s.d}, {"constraint", models::to_string(s.constraint)}};
}

models::ModelSpec model_spec_from_json(const json& j) {
  models::ModelSpec s;
  s.cls = models::class_from_string(get<std::string>(j, "class"));
  s.d = get_or<std::size_t>(j, "d", 4);
  s.constraint = models::constraint_from_string(get_or<std::string>(j, "constraint", "none"));
  s.validate();
  return s;
}

json to_json(const fitting::FitConfig& c) {
  return json{{"restarts", c.restarts},
              {"max_iters", c.max_iters},
              {"step_tol", c.step_tol},
              {"loss_tol", c.loss_tol},
              {"penalty_weight_schedule", c.penalty_weight_schedule},
              {"seed", c.seed}};
}

fitting::FitConfig fit_config_from_json(const json& j) {
  fitting::FitConfig c;
  c.restarts = get_or(j, "restarts", c.restarts);
  c.max_iters = get_or(j, "max_iters", c.max_iters);
  c.step_tol = get_or(j, "step_tol", c.step_tol);
  c.loss_tol = get_or(j, "loss_tol", c.loss_tol);
  c.penalty_weight_schedule = get_or(j, "penalty_weight_schedule", c.penalty_weight_schedule);
  c.seed = get_or(j, "seed", c.seed);
  c.validate();
  return c;
}

json to_json(const scenarios::ScenarioSpec& s) {
  return json{{"id", scenarios::to_string(s.id)},
              {"noise", s.noise},
              {"epsilon", s.epsilon},
              {"signalling_strength", s.signalling_strength},
              {"trials_per_setting", s.trials_per_setting},
              {"seed", s.seed}};
}

scenarios::ScenarioSpec scenario_from_json(const json& j) {
  scenarios::ScenarioSpec s;
  s.id = scenarios::id_from_string(get<std::string>(j, "id"));
  s.noise = get_or(j, "noise", s.noise);
  s.epsilon = get_or(j, "epsilon", s.epsilon);
  s.signalling_strength = get_or(j, "signalling_strength", s.signalling_strength);
  s.trials_per_setting = get_or(j, "trials_per_setting", s.trials_per_setting);
  s.seed = get_or(j, "seed", s.seed);
  s.validate();
  return s;
}

json to_json(const bell::CellArray& p) { return json(std::vector<double>(p.begin(), p.end())); }

bell::CellArray cells_from_json(const json& j) {
  if (!j.is_array() || j.size() != bell::kCells) throw ParseError("expected an array of 16 probabilities");
  bell::CellArray p{};
  for (std::size_t c = 0; c < bell::kCells; ++c) {
    if (!j[c].is_number()) throw ParseError("behavior cells must be numbers");
    p[c] = j[c].get<double>();
  }
  return p;
}

json to_json(const fitting::FitResult& r, const fitting::FitConfig& cfg) {
  json j{{"spec", to_json(r.spec)},
         {"config", to_json(cfg)},
         {"best_theta", r.best_theta},
         {"train_error", r.train_error},
         {"fitted_behavior", to_json(r.fitted_behavior.cells())},
         {"fitted_ns_delta", r.fitted_ns_delta},
         {"fitted_chsh_max", r.fitted_chsh_max},
         {"restarts_converged", r.restarts_converged},
         {"restart_errors", r.restart_errors}};
  if (r.ppt_min_eigenvalue) j["ppt_min_eigenvalue"] = *r.ppt_min_eigenvalue;
  return j;
}

fitting::FitResult fit_result_from_json(const json& j) {
  fitting::FitResult r;
  r.spec = model_spec_from_json(field(j, "spec"));
  r.best_theta = get<std::vector<double>>(j, "best_theta");
  r.train_error = get<double>(j, "train_error");
  r.fitted_behavior = bell::Behavior(cells_from_json(field(j, "fitted_behavior")));
  r.fitted_ns_delta = get<double>(j, "fitted_ns_delta");
  r.fitted_chsh_max = get<double>(j, "fitted_chsh_max");
  r.restarts_converged = get<std::size_t>(j, "restarts_converged");
  r.restart_errors = get<std::vector<double>>(j, "restart_errors");
  if (j.contains("ppt_min_eigenvalue")) r.ppt_min_eigenvalue = get<double>(j, "ppt_min_eigenvalue");
  return r;
}

json to_json(const traintest::StudySummary& s) {
  json models = json::array();
  for (const auto& m : s.models) models.push_back(to_json(m));
  json medians = json::array();
  for (const auto& m : s.medians) {
    medians.push_back(json{{"model", m.spec.label()}, {"train_error", m.train_error}, {"test_error", m.test_error}});
  }
  json pairs = json::array();
  for (const auto& p : s.pairs) {
    pairs.push_back(json{{"model_a", s.models[p.a].label()},
                         {"model_b", s.models[p.b].label()},
                         {"a", p.a},
                         {"b", p.b},
                         {"overfit_fraction", p.fraction},
                         {"overfit_count", p.count}});
  }
  json records = json::array();
  for (const auto& r : s.records) {
    records.push_back(json{{"seed", r.seed},
                           {"train_error", r.train_error},
                           {"test_error", r.test_error},
                           {"fitted_ns_delta", r.fitted_ns_delta},
                           {"fitted_chsh_max", r.fitted_chsh_max},
                           {"restarts_converged", r.restarts_converged}});
  }
  return json{{"scenario", to_json(s.scenario)}, {"models", models},   {"seeds", s.seeds},
              {"config", to_json(s.config)},     {"medians", medians}, {"pairs", pairs},
              {"records", records}};
}

json to_json(const traintest::TrainTestRun& r, const std::vector<traintest::OverfitVerdict>& v) {
  json results = json::array();
  for (const auto& m : r.results) {
    results.push_back(json{{"model", to_json(m.spec)},
                           {"label", m.spec.label()},
                           {"train_error", m.train_error},
                           {"test_error", m.test_error},
                           {"fitted_ns_delta", m.fit.fitted_ns_delta},
                           {"fitted_chsh_max", m.fit.fitted_chsh_max},
                           {"restarts_converged", m.fit.restarts_converged}});
  }
  json verdicts = json::array();
  for (const auto& x : v) {
    verdicts.push_back(json{{"model_a", x.model_a.label()},
                            {"model_b", x.model_b.label()},
                            {"a_overfits_b", x.a_overfits_b},
                            {"train_gap", x.train_gap},
                            {"test_gap", x.test_gap}});
  }
  return json{{"results", results}, {"verdicts", verdicts}};
}

json to_json(const RunManifest& m) {
  return json{{"command", m.command},           {"config", m.config},
              {"input_paths", m.input_paths},   {"output_paths", m.output_paths},
              {"seed", m.seed},                 {"tool_version", m.tool_version}};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + p.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

json load_json_arg(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  const bool inline_json = first != std::string::npos && (arg[first] == '{' || arg[first] == '[');
  const std::string text = inline_json ? arg : read_file(arg);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace bellfit::io
