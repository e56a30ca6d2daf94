#include <doctest.h>

#include <cmath>

#include "bellfit/errors.hpp"
#include "bellfit/oracles.hpp"
#include "bellfit/scenarios.hpp"
#include "support.hpp"

using namespace bellfit;
using namespace bellfit::scenarios;

namespace {

ScenarioSpec make(ScenarioId id, double noise = 0.0, double epsilon = 0.0, double strength = 0.0,
                  std::uint64_t n = 10000, std::uint64_t seed = 0) {
  ScenarioSpec s;
  s.id = id;
  s.noise = noise;
  s.epsilon = epsilon;
  s.signalling_strength = strength;
  s.trials_per_setting = n;
  s.seed = seed;
  return s;
}

const double kTsirelson = 2.0 * std::sqrt(2.0);

}  // namespace

TEST_CASE("scenario names round trip") {
  for (auto id : {ScenarioId::E1Entangled, ScenarioId::E2Dephased, ScenarioId::E3NearSaturation,
                  ScenarioId::E4Signalling, ScenarioId::E5NearTsirelson})
    CHECK(id_from_string(to_string(id)) == id);
  CHECK(to_string(ScenarioId::E2Dephased) == "E2-dephased");
  CHECK_THROWS_AS(id_from_string("E6"), InvalidArgument);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(make(ScenarioId::E1Entangled, 1.5).validate(), InvalidArgument);
  CHECK_THROWS_AS(make(ScenarioId::E1Entangled, -0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(make(ScenarioId::E3NearSaturation, 0.0, -0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(make(ScenarioId::E4Signalling, 0.0, 0.0, -0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(make(ScenarioId::E2Dephased, 0.0, 0.0, 0.0, 0).validate(), InvalidArgument);
  CHECK_THROWS_AS(make(ScenarioId::E5NearTsirelson, 0.0, std::nan("")).validate(), InvalidArgument);
}

TEST_CASE("E1 without noise reaches Tsirelson") {
  const auto b = ground_truth(make(ScenarioId::E1Entangled));
  CHECK(bell::chsh(b) == doctest::Approx(kTsirelson).epsilon(1e-12));
  CHECK(bell::ns_delta(b) <= 1e-12);
  CHECK_FALSE(oracles::is_ppt_separable(*source_state(make(ScenarioId::E1Entangled))));
}

TEST_CASE("E1 violates the local bound exactly below the white-noise threshold") {
  const double threshold = 1.0 - 1.0 / std::sqrt(2.0);
  for (int i = 0; i <= 100; ++i) {
    const double noise = i / 100.0;
    const double s = bell::chsh_max(ground_truth(make(ScenarioId::E1Entangled, noise)));
    CHECK(s == doctest::Approx((1.0 - noise) * kTsirelson).epsilon(1e-12));
    if (std::abs(noise - threshold) > 1e-3) CHECK((s > 2.0) == (noise < threshold));
  }
}

TEST_CASE("E2 is separable and local") {
  for (double noise : {0.0, 0.05, 0.3, 1.0}) {
    const auto s = make(ScenarioId::E2Dephased, noise);
    CHECK(oracles::is_ppt_separable(*source_state(s)));
    const auto b = ground_truth(s);
    CHECK(bell::chsh_max(b) <= 2.0 + 1e-12);
    CHECK(bell::ns_delta(b) <= 1e-12);
    CHECK(oracles::in_convex_hull(b.cells(), oracles::enumerate_local_vertices().vertices));
  }
}

TEST_CASE("full noise gives the uniform behavior") {
  for (auto id : {ScenarioId::E1Entangled, ScenarioId::E2Dephased, ScenarioId::E4Signalling}) {
    const auto b = ground_truth(make(id, 1.0));
    CHECK(testing::max_cell_diff(b.cells(), bell::Behavior::uniform().cells()) < 1e-15);
  }
}

TEST_CASE("E3 sits at the requested shortfall") {
  for (double eps : {0.0, 0.01, 0.1, 0.3, 1.0, 2.0}) {
    const auto s = make(ScenarioId::E3NearSaturation, 0.0, eps);
    const auto b = ground_truth(s);
    CHECK(std::abs(bell::chsh_max(b) - (2.0 - eps)) <= 1e-9);
    CHECK(bell::ns_delta(b) <= 1e-12);
    CHECK(oracles::is_ppt_separable(*source_state(s)));
  }
  CHECK_THROWS_AS(ground_truth(make(ScenarioId::E3NearSaturation, 0.0, 2.5)), UnreachableTarget);
}

TEST_CASE("E3 samples cross the local bound on a fraction of seeds") {
  int above = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = generate(make(ScenarioId::E3NearSaturation, 0.0, 0.01, 0.0, 1000, seed));
    above += bell::chsh_max(bell::frequencies(g.train).f) > 2.0;
  }
  CHECK(above >= 10);
}

TEST_CASE("E4 with zero strength equals E2") {
  for (double noise : {0.0, 0.2}) {
    const auto a = ground_truth(make(ScenarioId::E4Signalling, noise));
    const auto b = ground_truth(make(ScenarioId::E2Dephased, noise));
    CHECK(testing::max_cell_diff(a.cells(), b.cells()) == 0.0);
  }
}

TEST_CASE("E4 signals at the requested strength") {
  for (int i = 1; i <= 40; ++i) {
    const double strength = i / 100.0;
    const auto b = ground_truth(make(ScenarioId::E4Signalling, 0.0, 0.0, strength));
    CHECK(std::abs(bell::ns_delta(b) - strength) <= 1e-9);
    // Alice's marginals never depend on y.
    for (int x = 0; x < 2; ++x) CHECK(std::abs(b.alice(0, x, 0) - b.alice(0, x, 1)) <= 1e-15);
  }
  CHECK_THROWS_AS(ground_truth(make(ScenarioId::E4Signalling, 0.0, 0.0, 5.0)), UnreachableTarget);
}

TEST_CASE("E4 signalling survives sampling at 1e6 trials") {
  const auto g = generate(make(ScenarioId::E4Signalling, 0.0, 0.0, 0.1, 1000000, 1));
  CHECK(std::abs(bell::ns_delta(bell::frequencies(g.train)) - 0.1) <= 0.005);
  CHECK(std::abs(bell::ns_delta(bell::frequencies(g.test)) - 0.1) <= 0.005);
}

TEST_CASE("E2 samples are almost never exactly no-signalling") {
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = generate(make(ScenarioId::E2Dephased, 0.0, 0.0, 0.0, 10000, seed));
    positive += bell::ns_delta(bell::frequencies(g.train)) > 0.0;
  }
  CHECK(positive >= 95);
}

TEST_CASE("E5 examples") {
  const auto half = ground_truth(make(ScenarioId::E5NearTsirelson, 0.0, kTsirelson - 2.0));
  CHECK(testing::max_cell_diff(half.cells(), oracles::pr_box().mix(bell::Behavior::uniform(), 0.5).cells()) <= 1e-9);
  CHECK(bell::chsh(half) == doctest::Approx(2.0).epsilon(1e-9));
  const auto near = ground_truth(make(ScenarioId::E5NearTsirelson, 0.0, 0.01));
  CHECK(std::abs(bell::chsh_max(near) - (kTsirelson - 0.01)) <= 1e-9);
  CHECK(bell::ns_delta(near) <= 1e-12);
  CHECK_FALSE(source_state(make(ScenarioId::E5NearTsirelson, 0.0, 0.01)).has_value());
  // Negative epsilon goes beyond Tsirelson; beyond 4 is out of reach.
  CHECK(bell::chsh_max(ground_truth(make(ScenarioId::E5NearTsirelson, 0.0, -0.5))) ==
        doctest::Approx(kTsirelson + 0.5).epsilon(1e-9));
  CHECK_THROWS_AS(ground_truth(make(ScenarioId::E5NearTsirelson, 0.0, kTsirelson - 4.5)), UnreachableTarget);
}

TEST_CASE("born_behavior matches the Phi+ correlator cos(a - b)") {
  const double r = 1.0 / std::sqrt(2.0);
  const qmath::DensityMatrix phi(qmath::outer(qmath::CMat::column({r, 0, 0, r})));
  const double angles_a[2] = {0.2, 1.3};
  const double angles_b[2] = {-0.7, 2.1};
  const std::array<qmath::BinaryPovm, 2> alice{qmath::BinaryPovm::projective(std::sin(angles_a[0]), 0, std::cos(angles_a[0])),
                                               qmath::BinaryPovm::projective(std::sin(angles_a[1]), 0, std::cos(angles_a[1]))};
  const std::array<qmath::BinaryPovm, 2> bob{qmath::BinaryPovm::projective(std::sin(angles_b[0]), 0, std::cos(angles_b[0])),
                                             qmath::BinaryPovm::projective(std::sin(angles_b[1]), 0, std::cos(angles_b[1]))};
  const auto b = born_behavior(phi, alice, bob);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      CHECK(bell::correlator(b.cells(), x, y) == doctest::Approx(std::cos(angles_a[x] - angles_b[y])).epsilon(1e-12));
}

TEST_CASE("generation is deterministic and train differs from test") {
  const auto s = make(ScenarioId::E1Entangled, 0.05, 0.0, 0.0, 1000, 17);
  const auto a = generate(s);
  const auto b = generate(s);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK_FALSE(a.train == a.test);
  auto other = s;
  other.seed = 18;
  CHECK_FALSE(generate(other).train == a.train);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) CHECK(a.train.trials(x, y) == 1000);
}
