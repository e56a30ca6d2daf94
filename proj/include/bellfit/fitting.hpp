#pragma once

// Maximum-likelihood fitting of a model class to a count table.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "bellfit/bell_core.hpp"
#include "bellfit/models.hpp"

namespace bellfit::fitting {

struct FitConfig {
  std::size_t restarts = 16;
  std::size_t max_iters = 4000;
  double step_tol = 1e-10;
  double loss_tol = 1e-11;
  std::vector<double> penalty_weight_schedule{10.0, 100.0, 1000.0};
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on restarts == 0, non-positive tolerances or a
  /// schedule that is not positive and strictly increasing.
  void validate() const;
};

struct FitResult {
  models::ModelSpec spec;
  models::ParamVector best_theta;
  double train_error = 0.0;  // nats per trial
  bell::Behavior fitted_behavior = bell::Behavior::uniform();
  double fitted_ns_delta = 0.0;
  double fitted_chsh_max = 0.0;
  std::size_t restarts_converged = 0;
  /// Final loss of each restart, in restart order.
  std::vector<double> restart_errors;
  /// Smallest eigenvalue of the partial transpose of the fitted state (ppt mode only).
  std::optional<double> ppt_min_eigenvalue;
};

/// Weighted conditional relative entropy sum_xy w_xy sum_ab f log(f/p), with
/// 0 log 0 = 0 and p clamped below at 1e-12. Never negative.
double loss(const bell::EmpiricalFrequencies& f, const bell::Behavior& b);
double loss(const bell::EmpiricalFrequencies& f, const bell::CellArray& p);

/// Throws EmptySetting if a setting has no trials.
FitResult fit(const models::ModelSpec& spec, const bell::DataTable& table, const FitConfig& cfg);
FitResult fit(const models::ModelSpec& spec, const bell::EmpiricalFrequencies& f, const FitConfig& cfg);

/// Loss and its analytic gradient at theta.
double loss_and_gradient(const models::ModelSpec& spec, std::span<const double> theta,
                         const bell::EmpiricalFrequencies& f, std::span<double> grad);

/// max_k |g_k - fd_k| / max(max_k |fd_k|, 1e-6) where fd is the central
/// difference quotient with h = 1e-6.
double gradient_check(const models::ModelSpec& spec, std::span<const double> theta, const bell::EmpiricalFrequencies& f);

}  // namespace bellfit::fitting
