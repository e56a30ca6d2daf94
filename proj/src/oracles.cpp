#include "bellfit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bellfit::oracles {

using bell::Behavior;
using bell::CellArray;
using bell::cell;

namespace {

Behavior deterministic(int f_table, int g_table) {
  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const int a = (f_table >> (1 - x)) & 1;
      const int b = (g_table >> (1 - y)) & 1;
      p[cell(x, y, a, b)] = 1.0;
    }
  return Behavior(p);
}

}  // namespace

VertexSet enumerate_local_vertices() {
  VertexSet set{{}, VertexKind::LocalDeterministic};
  set.vertices.reserve(16);
  for (int f = 0; f < 4; ++f)
    for (int g = 0; g < 4; ++g) set.vertices.push_back(deterministic(f, g));
  return set;
}

Behavior pr_box(int alpha, int beta, int gamma) {
  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const int rhs = (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma;
          p[cell(x, y, a, b)] = ((a ^ b) == rhs) ? 0.5 : 0.0;
        }
  return Behavior(p);
}

VertexSet enumerate_ns_vertices() {
  VertexSet set = enumerate_local_vertices();
  set.kind = VertexKind::NoSignalling;
  for (int alpha = 0; alpha < 2; ++alpha)
    for (int beta = 0; beta < 2; ++beta)
      for (int gamma = 0; gamma < 2; ++gamma) set.vertices.push_back(pr_box(alpha, beta, gamma));
  return set;
}

double local_bound_chsh() {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : enumerate_local_vertices().vertices) best = std::max(best, bell::chsh(v));
  return best;
}

bool is_ppt_separable(const qmath::DensityMatrix& rho) {
  return qmath::min_eigenvalue(qmath::partial_transpose_b(rho)) >= -1e-9;
}

bool in_convex_hull(const CellArray& p, const std::vector<Behavior>& vertices, double tol) {
  // Phase one: minimize the sum of artificials r in  V lambda + r = p,
  // 1.lambda + r_n = 1, lambda, r >= 0. Feasible iff the optimum is ~0.
  const std::size_t m = bell::kCells + 1;
  const std::size_t nv = vertices.size();
  const std::size_t ncols = nv + m;
  std::vector<std::vector<double>> tab(m, std::vector<double>(ncols + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const double rhs = i < bell::kCells ? p[i] : 1.0;
    const double sign = rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < nv; ++k) tab[i][k] = sign * (i < bell::kCells ? vertices[k].cells()[i] : 1.0);
    tab[i][nv + i] = 1.0;
    tab[i][ncols] = sign * rhs;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = nv + i;

  // Reduced costs of the phase-one objective.
  std::vector<double> cost(ncols + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= ncols; ++j)
      if (j < nv || j == ncols) cost[j] -= tab[i][j];

  constexpr double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    // Bland's rule: lowest index with negative reduced cost.
    std::size_t enter = ncols;
    for (std::size_t j = 0; j < ncols; ++j)
      if (cost[j] < -eps) {
        enter = j;
        break;
      }
    if (enter == ncols) break;
    std::size_t leave = m;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      if (tab[i][enter] > eps) {
        const double ratio = tab[i][ncols] / tab[i][enter];
        if (ratio < best_ratio - eps || (std::abs(ratio - best_ratio) <= eps && leave < m && basis[i] < basis[leave])) {
          best_ratio = ratio;
          leave = i;
        }
      }
    if (leave == m) break;  // unbounded direction cannot occur in phase one
    const double piv = tab[leave][enter];
    for (auto& v : tab[leave]) v /= piv;
    for (std::size_t i = 0; i < m; ++i)
      if (i != leave && tab[i][enter] != 0.0) {
        const double factor = tab[i][enter];
        for (std::size_t j = 0; j <= ncols; ++j) tab[i][j] -= factor * tab[leave][j];
      }
    const double cf = cost[enter];
    for (std::size_t j = 0; j <= ncols; ++j) cost[j] -= cf * tab[leave][j];
    basis[leave] = enter;
  }
  return -cost[ncols] <= tol;
}

}  // namespace bellfit::oracles
