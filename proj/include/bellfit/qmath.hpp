#pragma once

// Small dense complex matrices for one- and two-qubit operators.
//
// Everything here is sized for the CHSH scenario: no operator is larger
// than 4x4, so CMat keeps its entries inline and never allocates.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace bellfit::qmath {

using cplx = std::complex<double>;

inline constexpr double kTypeTol = 1e-10;
inline constexpr double kDecompTol = 1e-8;

/// Row-major complex matrix with at most 16 entries.
class CMat {
 public:
  static constexpr std::size_t kMaxEntries = 16;

  CMat() = default;
  CMat(std::size_t rows, std::size_t cols);
  /// Row-major fill; throws InvalidArgument on a size mismatch or a
  /// non-finite entry.
  CMat(std::size_t rows, std::size_t cols, std::initializer_list<cplx> entries);

  static CMat identity(std::size_t n);
  static CMat diag(std::initializer_list<cplx> d);
  /// Column vector.
  static CMat column(std::initializer_list<cplx> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  bool is_square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const cplx> entries() const { return {data_.data(), size()}; }

  CMat adjoint() const;
  CMat transpose() const;
  cplx trace() const;
  bool all_finite() const;

  CMat& operator+=(const CMat& o);
  CMat& operator-=(const CMat& o);
  CMat& operator*=(cplx s);

  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(CMat a, cplx s) { return a *= s; }
  friend CMat operator*(cplx s, CMat a) { return a *= s; }
  friend CMat operator*(const CMat& a, const CMat& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::array<cplx, kMaxEntries> data_{};
};

/// Largest absolute entrywise difference; shapes must agree.
double max_abs_diff(const CMat& a, const CMat& b);
bool is_hermitian(const CMat& m, double tol);

CMat pauli_x();
CMat pauli_y();
CMat pauli_z();
/// |v><v| for a column vector v.
CMat outer(const CMat& v);

CMat kron(const CMat& a, const CMat& b);

struct EigenPair {
  double value;
  CMat vector;  // unit-norm column
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Eigenvalues come
/// back ascending. Throws NonHermitian if |m - m^dagger| exceeds 1e-8.
std::vector<EigenPair> hermitian_eigs(const CMat& m);
double min_eigenvalue(const CMat& m);

/// Unit-trace, positive semidefinite, Hermitian 4x4 operator.
class DensityMatrix {
 public:
  /// Validates the invariants at 1e-10; throws InvalidArgument otherwise.
  explicit DensityMatrix(CMat m);

  const CMat& mat() const { return mat_; }
  static DensityMatrix maximally_mixed();

 private:
  CMat mat_;
};

/// Two-outcome measurement {effect0, I - effect0} on a qubit.
class BinaryPovm {
 public:
  /// Validates Hermiticity and 0 <= effect0 <= I at 1e-10.
  explicit BinaryPovm(CMat effect0);

  const CMat& effect0() const { return effect0_; }
  CMat effect1() const { return CMat::identity(2) - effect0_; }
  CMat effect(int outcome) const { return outcome == 0 ? effect0_ : effect1(); }

  /// Projective measurement of the Bloch direction n, outcome 0 <-> +1.
  static BinaryPovm projective(double nx, double ny, double nz);

 private:
  CMat effect0_;
};

/// Transpose on the second qubit of a 4x4 operator.
CMat partial_transpose_b(const CMat& m);
inline CMat partial_transpose_b(const DensityMatrix& rho) { return partial_transpose_b(rho.mat()); }

/// rho = g g^dagger / tr(g g^dagger). Throws DegenerateFactor when the
/// trace underflows 1e-300.
DensityMatrix state_from_factor(const CMat& g);

inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// effect0 = U diag(logistic(t1), logistic(t2)) U^dagger with U = exp(iH),
/// H = h0 I + hx X + hy Y + hz Z. Parameter order: t1, t2, h0, hx, hy, hz.
BinaryPovm effect_from_params(std::span<const double, 6> theta);

/// exp(iH) for the Hermitian H = h0 I + hx X + hy Y + hz Z.
CMat unitary_from_generator(double h0, double hx, double hy, double hz);

}  // namespace bellfit::qmath
