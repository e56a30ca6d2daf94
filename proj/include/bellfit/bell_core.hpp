#pragma once

// Observational layer of the CHSH scenario: two settings and two outcomes
// per side. Arrays are laid out [x][y][a][b] flattened row-major.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace bellfit::bell {

inline constexpr std::size_t kCells = 16;

constexpr std::size_t cell(int x, int y, int a, int b) {
  return static_cast<std::size_t>(((x * 2 + y) * 2 + a) * 2 + b);
}
constexpr std::size_t setting(int x, int y) { return static_cast<std::size_t>(x * 2 + y); }

using CellArray = std::array<double, kCells>;

/// Conditional distribution p(a,b|x,y).
class Behavior {
 public:
  /// Throws InvalidArgument unless entries are in [0,1] and each setting
  /// sums to 1 within 1e-10.
  explicit Behavior(const CellArray& p);

  static Behavior uniform();

  double operator()(int x, int y, int a, int b) const { return p_[cell(x, y, a, b)]; }
  const CellArray& cells() const { return p_; }

  /// Marginal p_A(a|x,y).
  double alice(int a, int x, int y) const { return (*this)(x, y, a, 0) + (*this)(x, y, a, 1); }
  /// Marginal p_B(b|x,y).
  double bob(int b, int x, int y) const { return (*this)(x, y, 0, b) + (*this)(x, y, 1, b); }

  /// lambda * this + (1 - lambda) * other.
  Behavior mix(const Behavior& other, double lambda) const;

 private:
  CellArray p_;
};

bool is_valid_behavior(const CellArray& p, double tol = 1e-10);

/// Integer counts n(a,b|x,y).
class DataTable {
 public:
  using Counts = std::array<std::uint64_t, kCells>;

  DataTable() = default;
  explicit DataTable(const Counts& counts) : counts_(counts) {}

  std::uint64_t operator()(int x, int y, int a, int b) const { return counts_[cell(x, y, a, b)]; }
  std::uint64_t& at(int x, int y, int a, int b) { return counts_[cell(x, y, a, b)]; }
  const Counts& counts() const { return counts_; }

  std::uint64_t trials(int x, int y) const;
  std::uint64_t total() const;

  friend bool operator==(const DataTable&, const DataTable&) = default;

 private:
  Counts counts_{};
};

/// Relative frequencies f(a,b|x,y) plus design weights w_xy = N_xy / N.
struct EmpiricalFrequencies {
  CellArray f{};
  std::array<double, 4> weight{};

  double operator()(int x, int y, int a, int b) const { return f[cell(x, y, a, b)]; }
};

/// Multinomial draw of trials_per_setting trials at every setting. Each
/// setting draws from its own substream derived from (seed, x, y).
DataTable sample(const Behavior& b, std::uint64_t trials_per_setting, std::uint64_t seed);

/// Throws EmptySetting if any setting has no trials.
EmpiricalFrequencies frequencies(const DataTable& t);

/// Correlator E_xy = sum (-1)^(a xor b) p(a,b|x,y).
double correlator(const CellArray& p, int x, int y);

/// S = E00 + E01 + E10 - E11.
double chsh(const CellArray& p);
inline double chsh(const Behavior& b) { return chsh(b.cells()); }

/// max |S| over the eight relabelings of the CHSH expression.
double chsh_max(const CellArray& p);
inline double chsh_max(const Behavior& b) { return chsh_max(b.cells()); }

/// Worst-case shift of either party's marginal under a change of the other
/// party's setting. Zero exactly on the no-signalling subspace.
double ns_delta(const CellArray& p);
inline double ns_delta(const Behavior& b) { return ns_delta(b.cells()); }
inline double ns_delta(const EmpiricalFrequencies& f) { return ns_delta(f.f); }

/// CSV with header `x,y,a,b,count`, one row per nonzero cell.
std::string to_csv(const DataTable& t);
/// Throws ParseError on malformed input.
DataTable from_csv(const std::string& text);

}  // namespace bellfit::bell
