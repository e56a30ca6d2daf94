#include <doctest.h>

#include <cmath>
#include <random>

#include "bellfit/bell_core.hpp"
#include "bellfit/errors.hpp"
#include "support.hpp"

using namespace bellfit;
using namespace bellfit::bell;

namespace {

Behavior deterministic_00() {
  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) p[cell(x, y, 0, 0)] = 1.0;
  return Behavior(p);
}

Behavior pr_like() {
  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) p[cell(x, y, a, b)] = ((a ^ b) == (x & y)) ? 0.5 : 0.0;
  return Behavior(p);
}

// Phi+ with observables in the XZ plane at angles t: E(s, t) = cos(s - t).
Behavior phi_plus_xz(const double alice[2], const double bob[2]) {
  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double e = std::cos(alice[x] - bob[y]);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) p[cell(x, y, a, b)] = (1.0 + (a == b ? e : -e)) / 4.0;
    }
  return Behavior(p);
}

Behavior random_behavior(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  CellArray p{};
  for (int s = 0; s < 4; ++s) {
    double z = 0.0;
    for (int k = 0; k < 4; ++k) z += (p[4 * s + k] = g(rng));
    for (int k = 0; k < 4; ++k) p[4 * s + k] /= z;
  }
  return Behavior(p);
}

}  // namespace

TEST_CASE("cell indexing is x, y, a, b row-major") {
  CHECK(cell(0, 0, 0, 0) == 0);
  CHECK(cell(0, 0, 0, 1) == 1);
  CHECK(cell(0, 1, 0, 0) == 4);
  CHECK(cell(1, 0, 0, 0) == 8);
  CHECK(cell(1, 1, 1, 1) == 15);
}

TEST_CASE("Behavior validates normalization and range") {
  CellArray p{};
  CHECK_THROWS_AS(Behavior{p}, InvalidArgument);
  p.fill(0.25);
  p[0] = 0.26;
  CHECK_THROWS_AS(Behavior{p}, InvalidArgument);
  p[0] = 0.25 + 1e-12;
  CHECK_NOTHROW(Behavior{p});
}

TEST_CASE("sampling a deterministic behavior") {
  const auto t = sample(deterministic_00(), 1000, 3);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      CHECK(t(x, y, 0, 0) == 1000);
      CHECK(t.trials(x, y) == 1000);
    }
}

TEST_CASE("sampling the uniform behavior at 1e6 trials") {
  const auto f = frequencies(sample(Behavior::uniform(), 1000000, 42));
  for (double v : f.f) CHECK(std::abs(v - 0.25) <= 0.002);
}

TEST_CASE("sampling is deterministic in the seed") {
  const Behavior b = Behavior::uniform();
  CHECK(sample(b, 500, 7) == sample(b, 500, 7));
  CHECK_FALSE(sample(b, 500, 7) == sample(b, 500, 8));
  CHECK_THROWS_AS(sample(b, 0, 1), InvalidArgument);
}

TEST_CASE("frequencies examples") {
  DataTable t;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) t.at(x, y, a, b) = 1;
  auto f = frequencies(t);
  for (double v : f.f) CHECK(v == 0.25);
  for (double w : f.weight) CHECK(w == 0.25);

  t.at(0, 0, 0, 0) = 3;
  t.at(0, 0, 0, 1) = 1;
  t.at(0, 0, 1, 0) = 0;
  t.at(0, 0, 1, 1) = 0;
  f = frequencies(t);
  CHECK(f(0, 0, 0, 0) == 0.75);
  CHECK(f(0, 0, 0, 1) == 0.25);
  CHECK(f(0, 0, 1, 0) == 0.0);
  CHECK(f(0, 0, 1, 1) == 0.0);
  double wsum = 0.0;
  for (double w : f.weight) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("frequencies rejects an empty setting") {
  DataTable t;
  t.at(0, 0, 0, 0) = 1;
  t.at(0, 1, 0, 0) = 1;
  t.at(1, 0, 0, 0) = 1;
  CHECK_THROWS_AS(frequencies(t), EmptySetting);
}

TEST_CASE("law of large numbers at 1e7 trials") {
  std::mt19937_64 rng(11);
  const Behavior b = random_behavior(rng);
  const auto f = frequencies(sample(b, 10000000, 5));
  for (std::size_t c = 0; c < kCells; ++c) CHECK(std::abs(f.f[c] - b.cells()[c]) <= 5e-4);
}

TEST_CASE("chsh examples") {
  CHECK(chsh(Behavior::uniform()) == 0.0);
  CHECK(chsh(pr_like()) == doctest::Approx(4.0).epsilon(1e-15));
  const double alice[2] = {0.0, M_PI / 2};
  const double bob[2] = {M_PI / 4, -M_PI / 4};
  CHECK(chsh(phi_plus_xz(alice, bob)) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("chsh_max examples") {
  CHECK(chsh_max(Behavior::uniform()) == 0.0);
  CHECK(chsh_max(pr_like()) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(chsh_max(deterministic_00()) == doctest::Approx(2.0).epsilon(1e-15));
  // Relabeling Bob's outcome at y = 1 turns S into a different variant.
  CellArray p = pr_like().cells();
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) std::swap(p[cell(x, 1, a, 0)], p[cell(x, 1, a, 1)]);
  CHECK(chsh(Behavior(p)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(chsh_max(Behavior(p)) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("ns_delta examples") {
  const double alice[2] = {0.3, 1.1};
  const double bob[2] = {-0.4, 2.0};
  CHECK(ns_delta(phi_plus_xz(alice, bob)) <= 1e-12);
  CHECK(ns_delta(pr_like()) == 0.0);

  // p_B(0|x=0,y) = 0.6, p_B(0|x=1,y) = 0.5, Alice uniform.
  CellArray p{};
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a) {
      p[cell(0, y, a, 0)] = 0.3;
      p[cell(0, y, a, 1)] = 0.2;
      p[cell(1, y, a, 0)] = 0.25;
      p[cell(1, y, a, 1)] = 0.25;
    }
  CHECK(ns_delta(Behavior(p)) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("property: chsh is linear in the behavior") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Behavior b1 = random_behavior(rng), b2 = random_behavior(rng);
    const double lam = u(rng);
    CHECK(std::abs(chsh(b1.mix(b2, lam)) - (lam * chsh(b1) + (1 - lam) * chsh(b2))) <= 1e-12);
  }
}

TEST_CASE("property: finite samples of a no-signalling source fluctuate off the NS subspace") {
  const double alice[2] = {0.0, M_PI / 2};
  const double bob[2] = {M_PI / 4, -M_PI / 4};
  const Behavior b = phi_plus_xz(alice, bob);
  int positive = 0;
  for (std::uint64_t s = 0; s < 100; ++s) positive += ns_delta(frequencies(sample(b, 1000, s))) > 0.0;
  CHECK(positive >= 99);
}

TEST_CASE("CSV round trip") {
  std::mt19937_64 rng(13);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DataTable t = sample(random_behavior(rng), 1 + s * 37, s);
    CHECK(from_csv(to_csv(t)) == t);
  }
  const DataTable t = sample(deterministic_00(), 5, 1);
  CHECK(to_csv(t) == "x,y,a,b,count\n0,0,0,0,5\n0,1,0,0,5\n1,0,0,0,5\n1,1,0,0,5\n");
}

TEST_CASE("CSV parser tolerates CRLF and blank lines") {
  const auto t = from_csv("x,y,a,b,count\r\n\r\n0,0,1,1,7\r\n");
  CHECK(t(0, 0, 1, 1) == 7);
  CHECK(t.total() == 7);
}

TEST_CASE("CSV parser rejects malformed input") {
  CHECK_THROWS_AS(from_csv(""), ParseError);
  CHECK_THROWS_AS(from_csv("x,y,a,b,n\n"), ParseError);
  CHECK_THROWS_AS(from_csv("x,y,a,b,count\n0,0,0,0\n"), ParseError);
  CHECK_THROWS_AS(from_csv("x,y,a,b,count\n0,0,0,2,1\n"), ParseError);
  CHECK_THROWS_AS(from_csv("x,y,a,b,count\n0,0,0,0,-1\n"), ParseError);
  CHECK_THROWS_AS(from_csv("x,y,a,b,count\n0,0,0,0,1.5\n"), ParseError);
  CHECK_THROWS_AS(from_csv("x,y,a,b,count\n0,0,0,0,1\n0,0,0,0,2\n"), ParseError);
}
