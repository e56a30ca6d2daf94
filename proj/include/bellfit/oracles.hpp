#pragma once

// Brute-force references for the CHSH polytopes and two-qubit separability.

#include <vector>

#include "bellfit/bell_core.hpp"
#include "bellfit/qmath.hpp"

namespace bellfit::oracles {

enum class VertexKind { LocalDeterministic, NoSignalling };

struct VertexSet {
  std::vector<bell::Behavior> vertices;
  VertexKind kind;
};

/// The 16 behaviors a = f(x), b = g(y). Vertex index is 4*f + g with f, g
/// read as the two-bit tables (f(0), f(1)).
VertexSet enumerate_local_vertices();

/// The 16 local vertices followed by the 8 PR-box relabelings
/// a xor b = xy xor alpha x xor beta y xor gamma.
VertexSet enumerate_ns_vertices();

/// Index of the canonical PR box (a xor b = xy) inside enumerate_ns_vertices().
inline constexpr std::size_t kPrBoxIndex = 16;

bell::Behavior pr_box(int alpha = 0, int beta = 0, int gamma = 0);

double local_bound_chsh();

/// PPT criterion at tolerance 1e-9; exact for two qubits.
bool is_ppt_separable(const qmath::DensityMatrix& rho);

/// Feasibility of p = sum_k lambda_k v_k with lambda on the simplex,
/// decided by a phase-one simplex solve.
bool in_convex_hull(const bell::CellArray& p, const std::vector<bell::Behavior>& vertices, double tol = 1e-9);

}  // namespace bellfit::oracles
