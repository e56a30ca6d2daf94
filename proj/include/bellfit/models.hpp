#pragma once

// Parametric causal-model classes for the CHSH scenario.
//
// Each class is a smooth map from an unconstrained real vector onto a
// behavior. Classical conditionals go through softmax/logistic charts; the
// quantum class goes through state_from_factor and effect_from_params.
//
// Parameter layouts (d = latent cardinality):
//   cCC   [prior logits d | alice (x,l) 2d | bob (y,l) 2d]
//   cSD0  [prior d | setting p(x=0|l) d | alice 2d | bob 2d]
//   cCE0  [prior d | alice (x,l) 2d | bob (x,y,l) 4d]
//   qCC   [factor G: 16 complex entries, (re, im) row-major | A0 | A1 | B0 | B1], 6 reals per effect
//   nsCC  [24 softmax logits over oracles::enumerate_ns_vertices()]
// Binary logits give the probability of outcome 0.

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bellfit/bell_core.hpp"
#include "bellfit/qmath.hpp"

namespace bellfit::models {

enum class ModelClass { cCC, qCC, cSD0, cCE0, nsCC };
enum class Constraint { None, Ppt };

std::string to_string(ModelClass c);
std::string to_string(Constraint c);
/// Throws InvalidArgument for unknown names.
ModelClass class_from_string(const std::string& s);
Constraint constraint_from_string(const std::string& s);

struct ModelSpec {
  ModelClass cls = ModelClass::cCC;
  std::size_t d = 4;
  Constraint constraint = Constraint::None;

  /// Throws InvalidArgument if d < 1 or ppt is requested on a classical class.
  void validate() const;
  bool is_classical() const { return cls == ModelClass::cCC || cls == ModelClass::cSD0 || cls == ModelClass::cCE0; }
  /// e.g. "cSD0", "cCC(d=3)", "qCC+ppt".
  std::string label() const;

  friend auto operator<=>(const ModelSpec&, const ModelSpec&) = default;
};

using ParamVector = std::vector<double>;

std::size_t param_count(const ModelSpec& spec);

/// Throws ChartMismatch if theta has the wrong length.
bell::Behavior behavior_of(const ModelSpec& spec, std::span<const double> theta);

/// Unvalidated forward map used on the optimizer's hot path.
bell::CellArray behavior_cells(const ModelSpec& spec, std::span<const double> theta);

/// Forward map plus pullback: returns p(theta) and writes
/// grad[k] = sum_c dloss_dp[c] * dp_c/dtheta_k.
/// For qCC an optional Hermitian cotangent on the state adds the gradient of
/// Re tr(rho * state_cotangent).
bell::CellArray behavior_vjp(const ModelSpec& spec, std::span<const double> theta, const bell::CellArray& dloss_dp,
                             std::span<double> grad, const qmath::CMat* state_cotangent = nullptr);

/// qCC helpers.
inline constexpr std::size_t kQccStateParams = 32;
inline constexpr std::size_t kQccParams = 56;
qmath::CMat qcc_factor(std::span<const double> theta);
qmath::DensityMatrix qcc_state(std::span<const double> theta);
/// Writes a 4x4 factor into the first 32 entries of theta.
void set_qcc_factor(std::span<double> theta, const qmath::CMat& g);

/// Diagonal two-qubit register reproducing a cCC(d=4) model. Throws
/// UnsupportedCardinality if d != 4.
ParamVector embed_ccc_into_qcc(std::span<const double> theta_ccc, std::size_t d = 4);

/// Largest cell discrepancy between the cCC behavior and its qCC embedding.
double embedding_error(std::span<const double> theta_ccc, std::span<const double> theta_qcc);

/// Parameters (d = 4) whose behavior signals with ns_delta >= 0.1.
/// Accepts cSD0 or cCE0; anything else throws InvalidArgument.
ParamVector witness_signalling_params(ModelClass cls);

}  // namespace bellfit::models
