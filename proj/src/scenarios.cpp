#include "bellfit/scenarios.hpp"

#include <cmath>
#include <functional>

#include "bellfit/errors.hpp"
#include "bellfit/oracles.hpp"
#include "bellfit/rng.hpp"

namespace bellfit::scenarios {

using bell::Behavior;
using bell::CellArray;
using bell::cell;
using qmath::BinaryPovm;
using qmath::CMat;
using qmath::DensityMatrix;

namespace {

constexpr const char* kNames[] = {"E1-entangled", "E2-dephased", "E3-near-saturation", "E4-signalling",
                                  "E5-near-tsirelson"};

CMat phi_plus() {
  const double r = 1.0 / std::sqrt(2.0);
  return qmath::outer(CMat::column({r, 0.0, 0.0, r}));
}

DensityMatrix noisy_phi_plus(double noise) {
  return DensityMatrix(phi_plus() * (1.0 - noise) + CMat::identity(4) * (noise / 4.0));
}

DensityMatrix dephase_a(const DensityMatrix& rho) {
  const CMat xi = qmath::kron(qmath::pauli_x(), CMat::identity(2));
  return DensityMatrix((rho.mat() + xi * rho.mat() * xi) * 0.5);
}

// A: Z, X.  B: (Z + X)/sqrt 2, (Z - X)/sqrt 2.
std::array<BinaryPovm, 2> chsh_alice() { return {BinaryPovm::projective(0, 0, 1), BinaryPovm::projective(1, 0, 0)}; }
std::array<BinaryPovm, 2> chsh_bob() {
  const double r = 1.0 / std::sqrt(2.0);
  return {BinaryPovm::projective(r, 0, r), BinaryPovm::projective(-r, 0, r)};
}

DensityMatrix classically_correlated() {
  return DensityMatrix(CMat::diag({0.5, 0.0, 0.0, 0.5}));
}

// Alice measures Z twice; Bob measures cos(t) Z + sin(t) X and X. Gives
// correlators (cos t, 0, cos t, 0).
Behavior near_saturation(double t) {
  return born_behavior(classically_correlated(), {BinaryPovm::projective(0, 0, 1), BinaryPovm::projective(0, 0, 1)},
                       {BinaryPovm::projective(std::sin(t), 0, std::cos(t)), BinaryPovm::projective(1, 0, 0)});
}

// Bob's conditional p(b|a,x,y) reweighted by 1 + s_x (-1)^b k with
// s_0 = +1, s_1 = -1, renormalized per (a,x,y). Alice's marginals stay put.
Behavior push_bob(const Behavior& base, double k) {
  CellArray p = base.cells();
  for (int x = 0; x < 2; ++x) {
    const double sx = x == 0 ? 1.0 : -1.0;
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) {
        const double w0 = p[cell(x, y, a, 0)] * (1.0 + sx * k);
        const double w1 = p[cell(x, y, a, 1)] * (1.0 - sx * k);
        const double pa = p[cell(x, y, a, 0)] + p[cell(x, y, a, 1)];
        const double z = w0 + w1;
        p[cell(x, y, a, 0)] = z > 0.0 ? pa * w0 / z : 0.0;
        p[cell(x, y, a, 1)] = z > 0.0 ? pa * w1 / z : 0.0;
      }
  }
  return Behavior(p);
}

// Bisection for an increasing g on [lo, hi] with g(lo) <= target <= g(hi).
double bisect(const std::function<double(double)>& g, double lo, double hi, double target, const std::string& what) {
  constexpr double kTol = 1e-9;
  if (!(g(lo) <= target + kTol && target - kTol <= g(hi))) {
    throw UnreachableTarget(what + ": target " + std::to_string(target) + " is outside [" + std::to_string(g(lo)) +
                            ", " + std::to_string(g(hi)) + "]");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < target ? lo : hi) = mid;
  }
  const double best = std::abs(g(lo) - target) <= std::abs(g(hi) - target) ? lo : hi;
  if (std::abs(g(best) - target) > kTol) throw UnreachableTarget(what + ": bisection did not reach the target");
  return best;
}

}  // namespace

std::string to_string(ScenarioId id) { return kNames[static_cast<int>(id)]; }

ScenarioId id_from_string(const std::string& s) {
  for (int i = 0; i < 5; ++i)
    if (s == kNames[i]) return static_cast<ScenarioId>(i);
  throw InvalidArgument("unknown scenario id '" + s + "'");
}

void ScenarioSpec::validate() const {
  if (!(noise >= 0.0 && noise <= 1.0)) throw InvalidArgument("ScenarioSpec: noise must lie in [0, 1]");
  if (!std::isfinite(epsilon)) throw InvalidArgument("ScenarioSpec: epsilon must be finite");
  if (id == ScenarioId::E3NearSaturation && epsilon < 0.0) {
    throw InvalidArgument("ScenarioSpec: the E3 shortfall epsilon must be >= 0");
  }
  if (!(signalling_strength >= 0.0) || !std::isfinite(signalling_strength)) {
    throw InvalidArgument("ScenarioSpec: signalling_strength must be finite and >= 0");
  }
  if (trials_per_setting < 1) throw InvalidArgument("ScenarioSpec: trials_per_setting must be >= 1");
}

Behavior born_behavior(const DensityMatrix& rho, const std::array<BinaryPovm, 2>& alice,
                       const std::array<BinaryPovm, 2>& bob) {
  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const CMat op = qmath::kron(alice[static_cast<std::size_t>(x)].effect(a), bob[static_cast<std::size_t>(y)].effect(b));
          p[cell(x, y, a, b)] = std::max(0.0, (rho.mat() * op).trace().real());
        }
  return Behavior(p);
}

std::optional<DensityMatrix> source_state(const ScenarioSpec& s) {
  s.validate();
  switch (s.id) {
    case ScenarioId::E1Entangled: return noisy_phi_plus(s.noise);
    case ScenarioId::E2Dephased:
    case ScenarioId::E4Signalling: return dephase_a(noisy_phi_plus(s.noise));
    case ScenarioId::E3NearSaturation: return classically_correlated();
    case ScenarioId::E5NearTsirelson: return std::nullopt;
  }
  return std::nullopt;
}

Behavior ground_truth(const ScenarioSpec& s) {
  s.validate();
  switch (s.id) {
    case ScenarioId::E1Entangled:
    case ScenarioId::E2Dephased: return born_behavior(*source_state(s), chsh_alice(), chsh_bob());
    case ScenarioId::E3NearSaturation: {
      // chsh_max = 2 cos t falls from 2 to 0 on [0, pi/2].
      const double target = 2.0 - s.epsilon;
      const double t = bisect([](double u) { return -bell::chsh_max(near_saturation(u)); }, 0.0, M_PI / 2.0, -target,
                              "E3 tuning");
      return near_saturation(t);
    }
    case ScenarioId::E4Signalling: {
      const Behavior base = born_behavior(*source_state(s), chsh_alice(), chsh_bob());
      if (s.signalling_strength == 0.0) return base;
      const double k = bisect([&](double u) { return bell::ns_delta(push_bob(base, u)); }, 0.0, 1.0 - 1e-12,
                              s.signalling_strength, "E4 tuning");
      return push_bob(base, k);
    }
    case ScenarioId::E5NearTsirelson: {
      const Behavior pr = oracles::pr_box();
      const Behavior flat = Behavior::uniform();
      const double target = 2.0 * std::sqrt(2.0) - s.epsilon;
      const double w =
          bisect([&](double u) { return bell::chsh_max(pr.mix(flat, u)); }, 0.0, 1.0, target, "E5 tuning");
      return pr.mix(flat, w);
    }
  }
  throw InvalidArgument("ground_truth: unknown scenario");
}

Generated generate(const ScenarioSpec& s) {
  const Behavior truth = ground_truth(s);
  return {bell::sample(truth, s.trials_per_setting, derive_seed(s.seed, "train")),
          bell::sample(truth, s.trials_per_setting, derive_seed(s.seed, "test")), truth};
}

}  // namespace bellfit::scenarios
