#pragma once

// Train-and-test model comparison.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "bellfit/bell_core.hpp"
#include "bellfit/fitting.hpp"
#include "bellfit/models.hpp"
#include "bellfit/scenarios.hpp"

namespace bellfit::traintest {

/// Error differences at or below this many nats/trial count as ties. Two
/// fits that land on the same optimum differ only by optimizer round-off.
inline constexpr double kTieTolerance = 1e-9;

struct ModelOutcome {
  models::ModelSpec spec;
  double train_error = 0.0;
  double test_error = 0.0;
  fitting::FitResult fit;
};

struct TrainTestRun {
  bell::DataTable train;
  bell::DataTable test;
  std::vector<ModelOutcome> results;  // in the order the models were given
};

struct OverfitVerdict {
  models::ModelSpec model_a;
  models::ModelSpec model_b;
  bool a_overfits_b = false;
  double train_gap = 0.0;  // train_a - train_b
  double test_gap = 0.0;   // test_a - test_b
};

TrainTestRun run(const std::vector<models::ModelSpec>& models, const bell::DataTable& train,
                 const bell::DataTable& test, const fitting::FitConfig& cfg);

/// Lower training error and higher test error, each beyond the tie tolerance.
bool overfits(double train_a, double test_a, double train_b, double test_b, double tie = kTieTolerance);

/// Every ordered pair (i, j), i != j, in model order.
std::vector<OverfitVerdict> verdicts(const TrainTestRun& run);

/// Assigns every trial independently to the training table with probability
/// train_fraction. For tables that arrive as a single run.
std::pair<bell::DataTable, bell::DataTable> split(const bell::DataTable& table, double train_fraction,
                                                  std::uint64_t seed);

struct SeedRecord {
  std::uint64_t seed = 0;
  std::vector<double> train_error;  // per model
  std::vector<double> test_error;
  std::vector<double> fitted_ns_delta;
  std::vector<double> fitted_chsh_max;
  std::vector<std::size_t> restarts_converged;
};

struct PairFraction {
  std::size_t a = 0;  // model indices
  std::size_t b = 0;
  double fraction = 0.0;
  std::size_t count = 0;
};

struct ModelMedians {
  models::ModelSpec spec;
  double train_error = 0.0;
  double test_error = 0.0;
};

struct StudySummary {
  std::vector<models::ModelSpec> models;
  scenarios::ScenarioSpec scenario;
  std::vector<std::uint64_t> seeds;
  fitting::FitConfig config;
  std::vector<ModelMedians> medians;
  std::vector<PairFraction> pairs;  // ordered pairs, row-major over (a, b)
  std::vector<SeedRecord> records;  // in seed-list order

  /// Fraction of seeds on which model a overfits model b.
  double fraction(std::size_t a, std::size_t b) const;
};

inline constexpr std::size_t kMinStudySeeds = 10;

/// For every seed s: generate the scenario with seed s, fit each model with
/// config seed derive_seed(cfg.seed, s), compare. Seeds fan out over `jobs`
/// threads; the result does not depend on jobs. Throws InvalidArgument for
/// fewer than kMinStudySeeds seeds.
StudySummary multi_seed_study(const std::vector<models::ModelSpec>& models, const scenarios::ScenarioSpec& scenario,
                              const std::vector<std::uint64_t>& seeds, const fitting::FitConfig& cfg,
                              std::size_t jobs = 1);

double median(std::vector<double> v);

}  // namespace bellfit::traintest
