#pragma once

// JSON encodings of configs and reports, plus small file helpers.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bellfit/fitting.hpp"
#include "bellfit/models.hpp"
#include "bellfit/scenarios.hpp"
#include "bellfit/traintest.hpp"

namespace bellfit::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

// All from_json functions throw ParseError on missing or mistyped fields and
// InvalidArgument when the decoded value breaks an invariant.

json to_json(const models::ModelSpec& s);
models::ModelSpec model_spec_from_json(const json& j);

json to_json(const fitting::FitConfig& c);
fitting::FitConfig fit_config_from_json(const json& j);

json to_json(const scenarios::ScenarioSpec& s);
scenarios::ScenarioSpec scenario_from_json(const json& j);

/// The 16 cells in [x][y][a][b] order.
json to_json(const bell::CellArray& p);
bell::CellArray cells_from_json(const json& j);

json to_json(const fitting::FitResult& r, const fitting::FitConfig& cfg);
fitting::FitResult fit_result_from_json(const json& j);

json to_json(const traintest::StudySummary& s);
json to_json(const traintest::TrainTestRun& r, const std::vector<traintest::OverfitVerdict>& v);

struct RunManifest {
  std::string command;
  json config;
  std::vector<std::string> input_paths;
  std::vector<std::string> output_paths;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
};
json to_json(const RunManifest& m);

/// Throws IoError.
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& contents);

/// Accepts inline JSON (text starting with '{' or '[') or a path to a JSON
/// file. Throws ParseError or IoError.
json load_json_arg(const std::string& arg);

/// Indented dump with a trailing newline.
std::string dump(const json& j);

}  // namespace bellfit::io
