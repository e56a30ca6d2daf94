#include "bellfit/bell_core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <string_view>
#include <vector>

#include "bellfit/errors.hpp"
#include "bellfit/rng.hpp"

namespace bellfit::bell {

bool is_valid_behavior(const CellArray& p, double tol) {
  for (double v : p)
    if (!(v >= -tol && v <= 1.0 + tol)) return false;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      double s = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += p[cell(x, y, a, b)];
      if (std::abs(s - 1.0) > tol) return false;
    }
  return true;
}

Behavior::Behavior(const CellArray& p) : p_(p) {
  if (!is_valid_behavior(p)) throw InvalidArgument("Behavior: entries must be probabilities summing to 1 per setting");
}

Behavior Behavior::uniform() {
  CellArray p;
  p.fill(0.25);
  return Behavior(p);
}

Behavior Behavior::mix(const Behavior& other, double lambda) const {
  CellArray p;
  for (std::size_t k = 0; k < kCells; ++k) p[k] = lambda * p_[k] + (1.0 - lambda) * other.p_[k];
  return Behavior(p);
}

std::uint64_t DataTable::trials(int x, int y) const {
  std::uint64_t n = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) n += (*this)(x, y, a, b);
  return n;
}

std::uint64_t DataTable::total() const {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

DataTable sample(const Behavior& b, std::uint64_t trials_per_setting, std::uint64_t seed) {
  if (trials_per_setting < 1) throw InvalidArgument("sample: trials_per_setting must be >= 1");
  DataTable t;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(setting(x, y))));
      // Sequential conditional binomials over the four outcome cells.
      std::uint64_t remaining = trials_per_setting;
      double mass_left = 1.0;
      for (int k = 0; k < 4; ++k) {
        const int a = k / 2;
        const int bb = k % 2;
        std::uint64_t n = 0;
        if (k == 3) {
          n = remaining;
        } else if (remaining > 0 && mass_left > 0.0) {
          const double q = std::clamp(b(x, y, a, bb) / mass_left, 0.0, 1.0);
          std::binomial_distribution<std::uint64_t> dist(remaining, q);
          n = dist(rng);
        }
        t.at(x, y, a, bb) = n;
        remaining -= n;
        mass_left -= b(x, y, a, bb);
      }
    }
  return t;
}

EmpiricalFrequencies frequencies(const DataTable& t) {
  EmpiricalFrequencies out;
  const auto total = static_cast<double>(t.total());
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const std::uint64_t n = t.trials(x, y);
      if (n == 0) {
        throw EmptySetting("frequencies: setting (x=" + std::to_string(x) + ", y=" + std::to_string(y) +
                           ") has no trials");
      }
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          out.f[cell(x, y, a, b)] = static_cast<double>(t(x, y, a, b)) / static_cast<double>(n);
      out.weight[setting(x, y)] = static_cast<double>(n) / total;
    }
  return out;
}

double correlator(const CellArray& p, int x, int y) {
  return p[cell(x, y, 0, 0)] - p[cell(x, y, 0, 1)] - p[cell(x, y, 1, 0)] + p[cell(x, y, 1, 1)];
}

double chsh(const CellArray& p) {
  return correlator(p, 0, 0) + correlator(p, 0, 1) + correlator(p, 1, 0) - correlator(p, 1, 1);
}

double chsh_max(const CellArray& p) {
  const double e[4] = {correlator(p, 0, 0), correlator(p, 0, 1), correlator(p, 1, 0), correlator(p, 1, 1)};
  const double sum = e[0] + e[1] + e[2] + e[3];
  double best = 0.0;
  for (double ek : e) best = std::max(best, std::abs(sum - 2.0 * ek));
  return best;
}

double ns_delta(const CellArray& p) {
  double worst = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int x = 0; x < 2; ++x) {
      const double m0 = p[cell(x, 0, a, 0)] + p[cell(x, 0, a, 1)];
      const double m1 = p[cell(x, 1, a, 0)] + p[cell(x, 1, a, 1)];
      worst = std::max(worst, std::abs(m0 - m1));
    }
  for (int b = 0; b < 2; ++b)
    for (int y = 0; y < 2; ++y) {
      const double m0 = p[cell(0, y, 0, b)] + p[cell(0, y, 1, b)];
      const double m1 = p[cell(1, y, 0, b)] + p[cell(1, y, 1, b)];
      worst = std::max(worst, std::abs(m0 - m1));
    }
  return worst;
}

std::string to_csv(const DataTable& t) {
  std::ostringstream os;
  os << "x,y,a,b,count\n";
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (t(x, y, a, b) != 0) os << x << ',' << y << ',' << a << ',' << b << ',' << t(x, y, a, b) << '\n';
  return os.str();
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t parse_uint(std::string_view s, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ParseError("table CSV line " + std::to_string(line_no) + ": '" + std::string(s) +
                     "' is not a base-10 non-negative integer");
  }
  return v;
}

}  // namespace

DataTable from_csv(const std::string& text) {
  std::string_view rest(text);
  std::size_t line_no = 0;
  bool saw_header = false;
  std::array<bool, kCells> seen{};
  DataTable t;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "x,y,a,b,count") throw ParseError("table CSV: expected header 'x,y,a,b,count'");
      saw_header = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 5) throw ParseError("table CSV line " + std::to_string(line_no) + ": expected 5 fields");
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      const auto v = parse_uint(fields[static_cast<std::size_t>(k)], line_no);
      if (v > 1) throw ParseError("table CSV line " + std::to_string(line_no) + ": setting/outcome must be 0 or 1");
      idx[k] = static_cast<int>(v);
    }
    const auto c = cell(idx[0], idx[1], idx[2], idx[3]);
    if (seen[c]) throw ParseError("table CSV line " + std::to_string(line_no) + ": duplicate cell");
    seen[c] = true;
    t.at(idx[0], idx[1], idx[2], idx[3]) = parse_uint(fields[4], line_no);
  }
  if (!saw_header) throw ParseError("table CSV: missing header");
  return t;
}

}  // namespace bellfit::bell
