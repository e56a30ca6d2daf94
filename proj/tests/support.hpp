#pragma once

// Shared generators for the property tests.

#include <cmath>
#include <random>
#include <vector>

#include "bellfit/bell_core.hpp"
#include "bellfit/models.hpp"
#include "bellfit/qmath.hpp"

namespace testing {

using bellfit::qmath::CMat;
using bellfit::qmath::cplx;

inline std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline CMat random_matrix(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  return m;
}

inline CMat random_hermitian(std::mt19937_64& rng, std::size_t n) {
  const CMat a = random_matrix(rng, n);
  return (a + a.adjoint()) * 0.5;
}

inline bellfit::models::ParamVector random_params(std::mt19937_64& rng, const bellfit::models::ModelSpec& spec,
                                                  double scale = 1.0) {
  return normal_vector(rng, bellfit::models::param_count(spec), scale);
}

// Uniform frequencies with equal weights.
inline bellfit::bell::EmpiricalFrequencies as_frequencies(const bellfit::bell::CellArray& p) {
  return {p, {0.25, 0.25, 0.25, 0.25}};
}

// Counts whose frequencies equal p to ~1e-12.
inline bellfit::bell::DataTable exact_table(const bellfit::bell::Behavior& b) {
  constexpr double scale = 1099511627776.0;  // 2^40
  bellfit::bell::DataTable t;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) t.at(x, y, a, bb) = static_cast<std::uint64_t>(std::llround(b(x, y, a, bb) * scale));
  return t;
}

inline double max_cell_diff(const bellfit::bell::CellArray& a, const bellfit::bell::CellArray& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, std::abs(a[c] - b[c]));
  return m;
}

}  // namespace testing
