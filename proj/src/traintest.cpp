#include "bellfit/traintest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "bellfit/errors.hpp"
#include "bellfit/rng.hpp"

namespace bellfit::traintest {

TrainTestRun run(const std::vector<models::ModelSpec>& models, const bell::DataTable& train,
                 const bell::DataTable& test, const fitting::FitConfig& cfg) {
  TrainTestRun out{train, test, {}};
  const auto f_test = bell::frequencies(test);
  const auto f_train = bell::frequencies(train);
  for (const auto& spec : models) {
    ModelOutcome m;
    m.spec = spec;
    m.fit = fitting::fit(spec, f_train, cfg);
    m.train_error = m.fit.train_error;
    m.test_error = fitting::loss(f_test, m.fit.fitted_behavior);
    out.results.push_back(std::move(m));
  }
  return out;
}

bool overfits(double train_a, double test_a, double train_b, double test_b, double tie) {
  return train_a < train_b - tie && test_a > test_b + tie;
}

std::vector<OverfitVerdict> verdicts(const TrainTestRun& run) {
  std::vector<OverfitVerdict> out;
  const auto& r = run.results;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (i == j) continue;
      OverfitVerdict v;
      v.model_a = r[i].spec;
      v.model_b = r[j].spec;
      v.train_gap = r[i].train_error - r[j].train_error;
      v.test_gap = r[i].test_error - r[j].test_error;
      v.a_overfits_b = overfits(r[i].train_error, r[i].test_error, r[j].train_error, r[j].test_error);
      out.push_back(v);
    }
  return out;
}

std::pair<bell::DataTable, bell::DataTable> split(const bell::DataTable& table, double train_fraction,
                                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train_fraction must lie strictly between 0 and 1");
  }
  bell::DataTable::Counts tr{}, te{};
  for (std::size_t c = 0; c < bell::kCells; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::binomial_distribution<std::uint64_t> dist(table.counts()[c], train_fraction);
    tr[c] = table.counts()[c] == 0 ? 0 : dist(rng);
    te[c] = table.counts()[c] - tr[c];
  }
  return {bell::DataTable(tr), bell::DataTable(te)};
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double StudySummary::fraction(std::size_t a, std::size_t b) const {
  for (const auto& p : pairs)
    if (p.a == a && p.b == b) return p.fraction;
  throw InvalidArgument("StudySummary::fraction: no such ordered pair");
}

StudySummary multi_seed_study(const std::vector<models::ModelSpec>& models, const scenarios::ScenarioSpec& scenario,
                              const std::vector<std::uint64_t>& seeds, const fitting::FitConfig& cfg,
                              std::size_t jobs) {
  if (seeds.size() < kMinStudySeeds) {
    throw InvalidArgument("multi_seed_study: need at least " + std::to_string(kMinStudySeeds) + " seeds");
  }
  if (models.empty()) throw InvalidArgument("multi_seed_study: no models");
  for (const auto& m : models) m.validate();
  scenario.validate();
  cfg.validate();

  StudySummary out;
  out.models = models;
  out.scenario = scenario;
  out.seeds = seeds;
  out.config = cfg;
  out.records.resize(seeds.size());

  std::vector<std::exception_ptr> failures(seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        auto sc = scenario;
        sc.seed = seeds[i];
        const auto data = scenarios::generate(sc);
        auto fc = cfg;
        fc.seed = derive_seed(cfg.seed, seeds[i]);
        const auto r = run(models, data.train, data.test, fc);
        SeedRecord rec;
        rec.seed = seeds[i];
        for (const auto& m : r.results) {
          rec.train_error.push_back(m.train_error);
          rec.test_error.push_back(m.test_error);
          rec.fitted_ns_delta.push_back(m.fit.fitted_ns_delta);
          rec.fitted_chsh_max.push_back(m.fit.fitted_chsh_max);
          rec.restarts_converged.push_back(m.fit.restarts_converged);
        }
        out.records[i] = std::move(rec);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : failures)
    if (e) std::rethrow_exception(e);

  for (std::size_t m = 0; m < models.size(); ++m) {
    std::vector<double> tr, te;
    for (const auto& rec : out.records) {
      tr.push_back(rec.train_error[m]);
      te.push_back(rec.test_error[m]);
    }
    out.medians.push_back({models[m], median(tr), median(te)});
  }
  for (std::size_t a = 0; a < models.size(); ++a)
    for (std::size_t b = 0; b < models.size(); ++b) {
      if (a == b) continue;
      PairFraction pf{a, b, 0.0, 0};
      for (const auto& rec : out.records)
        if (overfits(rec.train_error[a], rec.test_error[a], rec.train_error[b], rec.test_error[b])) ++pf.count;
      pf.fraction = static_cast<double>(pf.count) / static_cast<double>(seeds.size());
      out.pairs.push_back(pf);
    }
  return out;
}

}  // namespace bellfit::traintest
