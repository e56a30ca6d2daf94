#include "bellfit/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bellfit/errors.hpp"

namespace bellfit::qmath {

namespace {

void check_shape(std::size_t rows, std::size_t cols) {
  if (rows * cols > CMat::kMaxEntries) {
    throw InvalidArgument("CMat: " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " exceeds the 16-entry limit");
  }
}

void require_same_shape(const CMat& a, const CMat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

CMat::CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) { check_shape(rows, cols); }

CMat::CMat(std::size_t rows, std::size_t cols, std::initializer_list<cplx> entries) : CMat(rows, cols) {
  if (entries.size() != rows * cols) {
    throw InvalidArgument("CMat: expected " + std::to_string(rows * cols) + " entries, got " +
                          std::to_string(entries.size()));
  }
  std::copy(entries.begin(), entries.end(), data_.begin());
  if (!all_finite()) throw InvalidArgument("CMat: non-finite entry");
}

CMat CMat::identity(std::size_t n) {
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMat CMat::diag(std::initializer_list<cplx> d) {
  CMat m(d.size(), d.size());
  std::size_t i = 0;
  for (const auto& v : d) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

CMat CMat::column(std::initializer_list<cplx> v) {
  CMat m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

CMat CMat::adjoint() const {
  CMat r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

CMat CMat::transpose() const {
  CMat r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

cplx CMat::trace() const {
  cplx t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

bool CMat::all_finite() const {
  return std::all_of(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(size()),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

CMat& CMat::operator+=(const CMat& o) {
  require_same_shape(*this, o, "CMat::operator+=");
  for (std::size_t k = 0; k < size(); ++k) data_[k] += o.data_[k];
  return *this;
}

CMat& CMat::operator-=(const CMat& o) {
  require_same_shape(*this, o, "CMat::operator-=");
  for (std::size_t k = 0; k < size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

CMat& CMat::operator*=(cplx s) {
  for (std::size_t k = 0; k < size(); ++k) data_[k] *= s;
  return *this;
}

CMat operator*(const CMat& a, const CMat& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("CMat product: inner dimensions differ");
  CMat r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

double max_abs_diff(const CMat& a, const CMat& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.entries()[k] - b.entries()[k]));
  return m;
}

bool is_hermitian(const CMat& m, double tol) { return m.is_square() && max_abs_diff(m, m.adjoint()) <= tol; }

CMat pauli_x() { return CMat(2, 2, {0.0, 1.0, 1.0, 0.0}); }
CMat pauli_y() { return CMat(2, 2, {0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0}); }
CMat pauli_z() { return CMat(2, 2, {1.0, 0.0, 0.0, -1.0}); }

CMat outer(const CMat& v) {
  if (v.cols() != 1) throw InvalidArgument("outer: expected a column vector");
  return v * v.adjoint();
}

CMat kron(const CMat& a, const CMat& b) {
  CMat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return r;
}

std::vector<EigenPair> hermitian_eigs(const CMat& m) {
  if (!m.is_square()) throw NonHermitian("hermitian_eigs: matrix is not square");
  if (!is_hermitian(m, kDecompTol)) throw NonHermitian("hermitian_eigs: matrix is not Hermitian");
  const std::size_t n = m.rows();

  // Work on the exactly Hermitian part so rounding asymmetry cannot stall
  // the sweeps.
  CMat a = (m + m.adjoint()) * 0.5;
  CMat v = CMat::identity(n);

  double scale = 0.0;
  for (const auto& z : a.entries()) scale = std::max(scale, std::abs(z));
  const double threshold = 1e-17 * std::max(scale, 1e-300);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= threshold) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double abs_pq = std::abs(a(p, q));
        if (abs_pq <= threshold) continue;
        const cplx phase = a(p, q) / abs_pq;
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * abs_pq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // G = diag(1, e^{-i phi}) on (p, q) composed with the real rotation.
        CMat g = CMat::identity(n);
        g(p, p) = c;
        g(p, q) = s;
        g(q, p) = -s * std::conj(phase);
        g(q, q) = c * std::conj(phase);

        a = g.adjoint() * a * g;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        v = v * g;
      }
    }
  }

  std::vector<EigenPair> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    CMat col(n, 1);
    for (std::size_t i = 0; i < n; ++i) col(i, 0) = v(i, k);
    out.push_back({a(k, k).real(), col});
  }
  std::stable_sort(out.begin(), out.end(), [](const EigenPair& x, const EigenPair& y) { return x.value < y.value; });
  return out;
}

double min_eigenvalue(const CMat& m) { return hermitian_eigs(m).front().value; }

DensityMatrix::DensityMatrix(CMat m) : mat_(m) {
  if (m.rows() != 4 || m.cols() != 4) throw InvalidArgument("DensityMatrix: expected a 4x4 matrix");
  if (!m.all_finite()) throw InvalidArgument("DensityMatrix: non-finite entry");
  if (!is_hermitian(m, kTypeTol)) throw InvalidArgument("DensityMatrix: not Hermitian");
  if (std::abs(m.trace() - 1.0) > kTypeTol) throw InvalidArgument("DensityMatrix: trace differs from 1");
  if (min_eigenvalue(m) < -kTypeTol) throw InvalidArgument("DensityMatrix: negative eigenvalue");
}

DensityMatrix DensityMatrix::maximally_mixed() { return DensityMatrix(CMat::identity(4) * 0.25); }

BinaryPovm::BinaryPovm(CMat effect0) : effect0_(effect0) {
  if (effect0.rows() != 2 || effect0.cols() != 2) throw InvalidArgument("BinaryPovm: expected a 2x2 effect");
  if (!effect0.all_finite()) throw InvalidArgument("BinaryPovm: non-finite entry");
  if (!is_hermitian(effect0, kTypeTol)) throw InvalidArgument("BinaryPovm: effect is not Hermitian");
  const auto eig = hermitian_eigs(effect0);
  if (eig.front().value < -kTypeTol || eig.back().value > 1.0 + kTypeTol) {
    throw InvalidArgument("BinaryPovm: effect eigenvalues outside [0, 1]");
  }
}

BinaryPovm BinaryPovm::projective(double nx, double ny, double nz) {
  const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (!(norm > 0.0)) throw InvalidArgument("BinaryPovm::projective: zero direction");
  nx /= norm;
  ny /= norm;
  nz /= norm;
  return BinaryPovm(CMat(2, 2, {0.5 * (1.0 + nz), 0.5 * cplx(nx, -ny), 0.5 * cplx(nx, ny), 0.5 * (1.0 - nz)}));
}

CMat partial_transpose_b(const CMat& m) {
  if (m.rows() != 4 || m.cols() != 4) throw InvalidArgument("partial_transpose_b: expected a 4x4 matrix");
  CMat r(4, 4);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t a2 = 0; a2 < 2; ++a2)
        for (std::size_t b2 = 0; b2 < 2; ++b2) r(2 * a + b, 2 * a2 + b2) = m(2 * a + b2, 2 * a2 + b);
  return r;
}

DensityMatrix state_from_factor(const CMat& g) {
  if (g.rows() != 4 || g.cols() != 4) throw InvalidArgument("state_from_factor: expected a 4x4 factor");
  if (!g.all_finite()) throw InvalidArgument("state_from_factor: non-finite factor");
  CMat rho = g * g.adjoint();
  const double tr = rho.trace().real();
  if (!(tr >= 1e-300)) throw DegenerateFactor("state_from_factor: trace(g g^dagger) underflows");
  rho *= 1.0 / tr;
  // Symmetrize away rounding so the Hermiticity check is exact.
  rho = (rho + rho.adjoint()) * 0.5;
  return DensityMatrix(rho);
}

CMat unitary_from_generator(double h0, double hx, double hy, double hz) {
  const double theta = std::sqrt(hx * hx + hy * hy + hz * hz);
  // exp(i h.sigma) = cos|h| I + i sin|h|/|h| (h.sigma)
  const double c = std::cos(theta);
  const double sinc = theta < 1e-8 ? 1.0 - theta * theta / 6.0 : std::sin(theta) / theta;
  const cplx i(0.0, 1.0);
  CMat u(2, 2, {c + i * sinc * hz, i * sinc * cplx(hx, -hy), i * sinc * cplx(hx, hy), c - i * sinc * hz});
  return u * std::exp(i * h0);
}

BinaryPovm effect_from_params(std::span<const double, 6> theta) {
  for (double t : theta)
    if (!std::isfinite(t)) throw InvalidArgument("effect_from_params: non-finite parameter");
  const CMat u = unitary_from_generator(theta[2], theta[3], theta[4], theta[5]);
  const CMat d = CMat::diag({logistic(theta[0]), logistic(theta[1])});
  CMat e = u * d * u.adjoint();
  e = (e + e.adjoint()) * 0.5;
  return BinaryPovm(e);
}

}  // namespace bellfit::qmath
