#pragma once

// Ground-truth behaviors for the five simulated experiments.
//
//   E1-entangled        (1-noise) Phi+ + noise I/4, CHSH-optimal measurements
//   E2-dephased         E1 after the dephasing rho -> (rho + X_A rho X_A)/2
//   E3-near-saturation  separable source tuned to chsh_max = 2 - epsilon
//   E4-signalling       E2 with Bob's outcome pushed by Alice's setting
//   E5-near-tsirelson   PR box mixed with white noise, chsh_max = 2 sqrt 2 - epsilon
//
// Outcome 0 is the +1 eigenvalue of each observable.

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "bellfit/bell_core.hpp"
#include "bellfit/qmath.hpp"

namespace bellfit::scenarios {

enum class ScenarioId { E1Entangled, E2Dephased, E3NearSaturation, E4Signalling, E5NearTsirelson };

std::string to_string(ScenarioId id);
/// Throws InvalidArgument for unknown ids.
ScenarioId id_from_string(const std::string& s);

struct ScenarioSpec {
  ScenarioId id = ScenarioId::E2Dephased;
  double noise = 0.0;                // E1, E2, E4
  double epsilon = 0.0;              // E3 shortfall; E5 distance below Tsirelson (negative exceeds it)
  double signalling_strength = 0.0;  // E4
  std::uint64_t trials_per_setting = 10000;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

/// p(a,b|x,y) = tr[rho (E_{a|x} (x) F_{b|y})].
bell::Behavior born_behavior(const qmath::DensityMatrix& rho, const std::array<qmath::BinaryPovm, 2>& alice,
                             const std::array<qmath::BinaryPovm, 2>& bob);

/// Source state of the quantum scenarios (E1 to E4); empty for E5.
std::optional<qmath::DensityMatrix> source_state(const ScenarioSpec& s);

/// Throws UnreachableTarget if a tuned scenario cannot bracket its target.
bell::Behavior ground_truth(const ScenarioSpec& s);

struct Generated {
  bell::DataTable train;
  bell::DataTable test;
  bell::Behavior truth;
};

/// Independent train and test samples from substreams (seed, "train") and
/// (seed, "test").
Generated generate(const ScenarioSpec& s);

}  // namespace bellfit::scenarios
