#include "bellfit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "bellfit/errors.hpp"
#include "bellfit/io.hpp"
#include "bellfit/traintest.hpp"

namespace bellfit::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) {
    throw InvalidArgument(std::string(what) + ": '" + std::string(s) + "' is not a non-negative integer");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

std::size_t default_jobs() {
  const char* env = std::getenv("BELLFIT_JOBS");
  if (env == nullptr || *env == '\0') return 1;
  const auto v = parse_u64(env, "BELLFIT_JOBS");
  if (v == 0) throw InvalidArgument("BELLFIT_JOBS must be >= 1");
  return v;
}

std::vector<models::ModelSpec> models_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("models: expected a non-empty JSON array of model specs");
  std::vector<models::ModelSpec> out;
  for (const auto& m : j) out.push_back(io::model_spec_from_json(m));
  return out;
}

fitting::FitConfig config_arg(const std::string& arg) {
  return arg.empty() ? fitting::FitConfig{} : io::fit_config_from_json(io::load_json_arg(arg));
}

bell::DataTable table_arg(const std::string& path) { return bell::from_csv(io::read_file(path)); }

// Grouped bars: median train and test error per model.
std::string errors_svg(const traintest::StudySummary& s) {
  constexpr int kGroup = 120, kBar = 40, kLeft = 70, kTop = 40, kHeight = 260;
  const int width = kLeft + kGroup * static_cast<int>(s.medians.size()) + 40;
  const int total_h = kTop + kHeight + 80;
  double top = 0.0;
  for (const auto& m : s.medians) top = std::max({top, m.train_error, m.test_error});
  if (top <= 0.0) top = 1.0;
  const auto bar_h = [&](double v) { return v / top * kHeight; };
  std::ostringstream o;
  char buf[256];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << total_h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"20\">median error (nats/trial), %s, %zu seeds</text>\n", kLeft,
                scenarios::to_string(s.scenario.id).c_str(), s.seeds.size());
  o << buf;
  const int base = kTop + kHeight;
  std::snprintf(buf, sizeof buf, "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", kLeft, base,
                width - 20, base);
  o << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", kLeft, kTop,
                kLeft, base);
  o << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.3g</text>\n", kLeft - 5, kTop + 4, top);
  o << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">0</text>\n", kLeft - 5, base + 4);
  o << buf;
  for (std::size_t i = 0; i < s.medians.size(); ++i) {
    const auto& m = s.medians[i];
    const int x0 = kLeft + 20 + kGroup * static_cast<int>(i);
    const double h1 = bar_h(m.train_error), h2 = bar_h(m.test_error);
    std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%.2f\" width=\"%d\" height=\"%.2f\" fill=\"#4c72b0\"/>\n", x0,
                  base - h1, kBar, h1);
    o << buf;
    std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%.2f\" width=\"%d\" height=\"%.2f\" fill=\"#dd8452\"/>\n",
                  x0 + kBar, base - h2, kBar, h2);
    o << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", x0 + kBar, base + 18,
                  m.spec.label().c_str());
    o << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%d\" y=\"%d\" width=\"12\" height=\"12\" fill=\"#4c72b0\"/><text x=\"%d\" y=\"%d\">train</text>\n",
                kLeft, base + 40, kLeft + 16, base + 50);
  o << buf;
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%d\" y=\"%d\" width=\"12\" height=\"12\" fill=\"#dd8452\"/><text x=\"%d\" y=\"%d\">test</text>\n",
                kLeft + 70, base + 40, kLeft + 86, base + 50);
  o << buf;
  o << "</svg>\n";
  return o.str();
}

std::string errors_csv(const traintest::StudySummary& s) {
  std::ostringstream o;
  o << "seed,model,train_error,test_error,fitted_ns_delta,fitted_chsh_max\n";
  for (const auto& r : s.records)
    for (std::size_t m = 0; m < s.models.size(); ++m) {
      o << r.seed << ',' << s.models[m].label() << ',' << fmt(r.train_error[m]) << ',' << fmt(r.test_error[m]) << ','
        << fmt(r.fitted_ns_delta[m]) << ',' << fmt(r.fitted_chsh_max[m]) << '\n';
    }
  return o.str();
}

struct Options {
  std::string scenario, model, models, table, train, test, config, out, seeds = "0..49";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

int cmd_generate(const Options& o, std::ostream& out) {
  auto spec = io::scenario_from_json(io::load_json_arg(o.scenario));
  if (o.seed) spec.seed = *o.seed;
  const auto data = scenarios::generate(spec);
  const fs::path dir(o.out);
  ensure_dir(dir);
  io::RunManifest m{"generate", io::to_json(spec), {o.scenario}, {}, spec.seed};
  for (const char* name : {"train.csv", "test.csv", "truth.json"}) m.output_paths.push_back((dir / name).string());
  io::write_file(dir / "train.csv", bell::to_csv(data.train));
  io::write_file(dir / "test.csv", bell::to_csv(data.test));
  const json truth{{"scenario", io::to_json(spec)},
                   {"behavior", io::to_json(data.truth.cells())},
                   {"chsh_max", bell::chsh_max(data.truth)},
                   {"ns_delta", bell::ns_delta(data.truth)},
                   {"manifest", "manifest.json"}};
  io::write_file(dir / "truth.json", io::dump(truth));
  io::write_file(dir / "manifest.json", io::dump(io::to_json(m)));
  out << "wrote " << dir.string() << "/{train.csv,test.csv,truth.json,manifest.json}\n";
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const auto spec = io::model_spec_from_json(io::load_json_arg(o.model));
  auto cfg = config_arg(o.config);
  if (o.seed) cfg.seed = *o.seed;
  const auto table = table_arg(o.table);
  const auto result = fitting::fit(spec, table, cfg);
  const fs::path path(o.out);
  const fs::path manifest_path = path.string() + ".manifest.json";
  json j = io::to_json(result, cfg);
  j["manifest"] = manifest_path.filename().string();
  io::RunManifest m{"fit", json{{"model", io::to_json(spec)}, {"fit", io::to_json(cfg)}}, {o.model, o.table}, {},
                    cfg.seed};
  if (!o.config.empty()) m.input_paths.push_back(o.config);
  m.output_paths.push_back(path.string());
  io::write_file(path, io::dump(j));
  io::write_file(manifest_path, io::dump(io::to_json(m)));
  out << spec.label() << ": train_error " << fmt(result.train_error) << '\n';
  return kOk;
}

int cmd_study(const Options& o, std::ostream& out) {
  const auto models = models_from_json(io::load_json_arg(o.models));
  const auto spec = io::scenario_from_json(io::load_json_arg(o.scenario));
  auto cfg = config_arg(o.config);
  if (o.seed) cfg.seed = *o.seed;
  const auto seeds = parse_seeds(o.seeds);
  const std::size_t jobs = o.jobs ? *o.jobs : default_jobs();
  if (jobs == 0) throw InvalidArgument("--jobs must be >= 1");
  const auto summary = traintest::multi_seed_study(models, spec, seeds, cfg, jobs);

  const fs::path dir(o.out);
  ensure_dir(dir);
  json models_json = json::array();
  for (const auto& m : models) models_json.push_back(io::to_json(m));
  io::RunManifest m{"study",
                    json{{"models", models_json}, {"scenario", io::to_json(spec)}, {"fit", io::to_json(cfg)},
                         {"seeds", o.seeds}},
                    {o.models, o.scenario},
                    {},
                    cfg.seed};
  if (!o.config.empty()) m.input_paths.push_back(o.config);
  for (const char* name : {"study.json", "errors.csv", "errors.svg"}) m.output_paths.push_back((dir / name).string());
  json j = io::to_json(summary);
  j["manifest"] = "manifest.json";
  io::write_file(dir / "study.json", io::dump(j));
  io::write_file(dir / "errors.csv", errors_csv(summary));
  io::write_file(dir / "errors.svg", errors_svg(summary));
  io::write_file(dir / "manifest.json", io::dump(io::to_json(m)));
  for (const auto& p : summary.pairs) {
    out << models[p.a].label() << " overfits " << models[p.b].label() << ": " << p.count << "/" << seeds.size()
        << '\n';
  }
  return kOk;
}

int cmd_verdict(const Options& o, std::ostream& out) {
  const auto models = models_from_json(io::load_json_arg(o.models));
  auto cfg = config_arg(o.config);
  if (o.seed) cfg.seed = *o.seed;
  const auto train = table_arg(o.train);
  const auto test = table_arg(o.test);
  const auto r = traintest::run(models, train, test, cfg);
  const auto v = traintest::verdicts(r);
  const fs::path path(o.out);
  const fs::path manifest_path = path.string() + ".manifest.json";
  json j = io::to_json(r, v);
  j["manifest"] = manifest_path.filename().string();
  json models_json = json::array();
  for (const auto& m : models) models_json.push_back(io::to_json(m));
  io::RunManifest m{"verdict", json{{"models", models_json}, {"fit", io::to_json(cfg)}}, {o.models, o.train, o.test},
                    {path.string()}, cfg.seed};
  if (!o.config.empty()) m.input_paths.push_back(o.config);
  io::write_file(path, io::dump(j));
  io::write_file(manifest_path, io::dump(io::to_json(m)));
  for (const auto& x : v)
    if (x.a_overfits_b) out << x.model_a.label() << " overfits " << x.model_b.label() << '\n';
  return kOk;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_u64(std::string_view(spec).substr(0, dots), "seeds");
    const auto hi = parse_u64(std::string_view(spec).substr(dots + 2), "seeds");
    if (hi < lo) throw InvalidArgument("seeds: empty range '" + spec + "'");
    if (hi - lo >= 1000000) throw InvalidArgument("seeds: range too large");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = spec.find(',', start);
    out.push_back(parse_u64(std::string_view(spec).substr(start, comma == std::string::npos ? spec.npos : comma - start),
                            "seeds"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"bellfit: finite-run CHSH data, causal-model fits and train/test verdicts"};
  app.set_version_flag("--version", io::kToolVersion);
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;

  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the seed");
  };

  auto* gen = app.add_subcommand("generate", "Sample train/test tables from a scenario");
  gen->add_option("--scenario", o.scenario, "Scenario JSON (file or inline)")->required();
  gen->add_option("--out", o.out, "Output directory")->required();
  add_seed(gen);

  auto* fit = app.add_subcommand("fit", "Fit one model class to a count table");
  fit->add_option("--model", o.model, "Model spec JSON (file or inline)")->required();
  fit->add_option("--table", o.table, "Count table CSV")->required();
  fit->add_option("--config", o.config, "Fit config JSON (file or inline)");
  fit->add_option("--out", o.out, "Output JSON path")->required();
  add_seed(fit);

  auto* study = app.add_subcommand("study", "Multi-seed train/test study");
  study->add_option("--models", o.models, "JSON array of model specs (file or inline)")->required();
  study->add_option("--scenario", o.scenario, "Scenario JSON (file or inline)")->required();
  study->add_option("--seeds", o.seeds, "Seed list: a..b or a,b,c")->capture_default_str();
  study->add_option("--config", o.config, "Fit config JSON (file or inline)");
  study->add_option("--out", o.out, "Output directory")->required();
  study->add_option("--jobs", jobs, "Worker threads (default: $BELLFIT_JOBS or 1)");
  add_seed(study);

  auto* verdict = app.add_subcommand("verdict", "Fit models on a train table, score them on a test table");
  verdict->add_option("--models", o.models, "JSON array of model specs (file or inline)")->required();
  verdict->add_option("--train", o.train, "Training table CSV")->required();
  verdict->add_option("--test", o.test, "Test table CSV")->required();
  verdict->add_option("--config", o.config, "Fit config JSON (file or inline)");
  verdict->add_option("--out", o.out, "Output JSON path")->required();
  add_seed(verdict);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  for (auto* sub : {gen, fit, study, verdict})
    if (sub->count("--seed") > 0) o.seed = seed;
  if (study->count("--jobs") > 0) o.jobs = jobs;

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (fit->parsed()) return cmd_fit(o, out);
    if (study->parsed()) return cmd_study(o, out);
    return cmd_verdict(o, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const EmptySetting& e) {
    err << "error: " << e.what() << '\n';
    return kFitError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ChartMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UnreachableTarget& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UnsupportedCardinality& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFitError;
  }
}

}  // namespace bellfit::cli
