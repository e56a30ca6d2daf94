#include "bellfit/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <random>

#include "bellfit/errors.hpp"
#include "bellfit/rng.hpp"

namespace bellfit::fitting {

using bell::CellArray;
using bell::EmpiricalFrequencies;
using models::ModelClass;
using models::ModelSpec;
using models::ParamVector;

namespace {

constexpr double kClamp = 1e-12;
constexpr double kPptTarget = -1e-6;
constexpr double kPenaltyCap = 1e12;

// f(theta, grad) -> value; grad is overwritten.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

struct MinimizeOutcome {
  double value;
  bool converged;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Limited-memory BFGS with Armijo backtracking.
MinimizeOutcome minimize(const Objective& obj, ParamVector& x, const FitConfig& cfg) {
  constexpr std::size_t kMemory = 10;
  constexpr double kGradTol = 1e-10;
  constexpr int kFlatIters = 3;
  const std::size_t n = x.size();

  ParamVector g(n), xn(n), gn(n), d(n);
  double fx = obj(x, g);
  std::deque<ParamVector> ss, ys;
  std::deque<double> rhos;
  int flat = 0;

  const auto safe_eval = [&](std::span<const double> at, std::span<double> grad) {
    try {
      const double v = obj(at, grad);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const DegenerateFactor&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    if (max_abs(g) <= kGradTol) return {fx, true};

    // Two-loop recursion.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    std::vector<double> alpha(ss.size());
    for (std::size_t k = ss.size(); k-- > 0;) {
      alpha[k] = rhos[k] * dot(ss[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * ys[k][i];
    }
    if (!ss.empty()) {
      const double gamma = dot(ss.back(), ys.back()) / dot(ys.back(), ys.back());
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < ss.size(); ++k) {
      const double beta = rhos[k] * dot(ys[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * ss[k][i];
    }
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      ss.clear();
      ys.clear();
      rhos.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
    }

    double step = ss.empty() ? std::min(1.0, 1.0 / max_abs(g)) : 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[i];
      fn = safe_eval(xn, gn);
      if (fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!ss.empty()) {
        ss.clear();
        ys.clear();
        rhos.clear();
        continue;
      }
      // No descent left along the gradient at working precision.
      return {fx, true};
    }

    ParamVector s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double decrease = fx - fn;
    const double step_len = max_abs(s);
    x.swap(xn);
    g.swap(gn);
    fx = fn;

    const double sy = dot(s, y);
    if (sy > 1e-16 * std::sqrt(dot(s, s) * dot(y, y))) {
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rhos.push_back(1.0 / sy);
      if (ss.size() > kMemory) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }

    if (step_len <= cfg.step_tol) return {fx, true};
    flat = decrease <= cfg.loss_tol * std::max(1.0, std::abs(fx)) ? flat + 1 : 0;
    if (flat >= kFlatIters) return {fx, true};
  }
  return {fx, false};
}

CellArray loss_cotangent(const EmpiricalFrequencies& f, const CellArray& p) {
  CellArray g{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double w = f.weight[bell::setting(x, y)];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const auto c = bell::cell(x, y, a, b);
          if (f.f[c] > 0.0 && p[c] > kClamp) g[c] = -w * f.f[c] / p[c];
        }
    }
  return g;
}

double raw_loss(const EmpiricalFrequencies& f, const CellArray& p) {
  double err = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double w = f.weight[bell::setting(x, y)];
      double s = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const auto c = bell::cell(x, y, a, b);
          if (f.f[c] > 0.0) s += f.f[c] * std::log(f.f[c] / std::max(p[c], kClamp));
        }
      err += w * s;
    }
  return err;
}

// Smallest eigenvalue of rho^{T_B} and its eigenvector.
qmath::EigenPair ppt_eigen(std::span<const double> theta) {
  const auto rho = models::qcc_state(theta);
  return qmath::hermitian_eigs(qmath::partial_transpose_b(rho)).front();
}

double penalized_objective(const ModelSpec& spec, const EmpiricalFrequencies& f, double mu,
                           std::span<const double> theta, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto p0 = models::behavior_cells(spec, theta);
  const auto cot = loss_cotangent(f, p0);
  const auto lowest = ppt_eigen(theta);
  double pen = 0.0;
  if (lowest.value < 0.0) {
    pen = mu * lowest.value * lowest.value;
    // d lambda = tr[(v v^dagger)^{T_B} d rho].
    const qmath::CMat dir = qmath::partial_transpose_b(qmath::outer(lowest.vector)) * (2.0 * mu * lowest.value);
    models::behavior_vjp(spec, theta, cot, grad, &dir);
  } else {
    models::behavior_vjp(spec, theta, cot, grad);
  }
  return raw_loss(f, p0) + pen;
}

// Mix the fitted state with I/4 just enough to make the partial transpose
// positive, then write a factor of the mixed state back into theta.
void repair_ppt(ParamVector& theta) {
  const double lam = ppt_eigen(theta).value;
  if (lam >= 0.0) return;
  const double t = (-lam + 1e-12) / (0.25 - lam);
  const auto rho = models::qcc_state(theta).mat();
  const qmath::CMat mixed = rho * (1.0 - t) + qmath::CMat::identity(4) * (t / 4.0);
  const auto eig = qmath::hermitian_eigs(mixed);
  qmath::CMat g(4, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const double r = std::sqrt(std::max(eig[k].value, 0.0));
    for (std::size_t i = 0; i < 4; ++i) g(i, k) = eig[k].vector(i, 0) * r;
  }
  models::set_qcc_factor(theta, g);
}

ParamVector initial_point(std::size_t n, std::uint64_t seed, std::size_t k) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector th(n);
  for (auto& v : th) v = 0.5 * normal(rng);
  return th;
}

}  // namespace

void FitConfig::validate() const {
  if (restarts < 1) throw InvalidArgument("FitConfig: restarts must be >= 1");
  if (max_iters < 1) throw InvalidArgument("FitConfig: max_iters must be >= 1");
  if (!(step_tol > 0.0) || !(loss_tol > 0.0)) throw InvalidArgument("FitConfig: tolerances must be positive");
  if (penalty_weight_schedule.empty()) throw InvalidArgument("FitConfig: penalty schedule must not be empty");
  for (std::size_t i = 0; i < penalty_weight_schedule.size(); ++i) {
    const double mu = penalty_weight_schedule[i];
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("FitConfig: penalty weights must be positive");
    if (i > 0 && !(mu > penalty_weight_schedule[i - 1])) {
      throw InvalidArgument("FitConfig: penalty schedule must be strictly increasing");
    }
  }
}

double loss(const EmpiricalFrequencies& f, const CellArray& p) { return std::max(0.0, raw_loss(f, p)); }

double loss(const EmpiricalFrequencies& f, const bell::Behavior& b) { return loss(f, b.cells()); }

double loss_and_gradient(const ModelSpec& spec, std::span<const double> theta, const EmpiricalFrequencies& f,
                         std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto p = models::behavior_cells(spec, theta);
  models::behavior_vjp(spec, theta, loss_cotangent(f, p), grad);
  return raw_loss(f, p);
}

FitResult fit(const ModelSpec& spec, const bell::DataTable& table, const FitConfig& cfg) {
  return fit(spec, bell::frequencies(table), cfg);
}

FitResult fit(const ModelSpec& spec, const EmpiricalFrequencies& f, const FitConfig& cfg) {
  spec.validate();
  cfg.validate();
  const bool ppt = spec.constraint == models::Constraint::Ppt;
  const std::size_t n = models::param_count(spec);

  FitResult out;
  out.spec = spec;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cfg.restarts; ++k) {
    ParamVector theta = initial_point(n, cfg.seed, k);
    bool converged = false;
    if (!ppt) {
      const Objective obj = [&](std::span<const double> th, std::span<double> g) {
        return loss_and_gradient(spec, th, f, g);
      };
      converged = minimize(obj, theta, cfg).converged;
    } else {
      double mu = 0.0;
      const auto run = [&](double weight) {
        mu = weight;
        const Objective obj = [&](std::span<const double> th, std::span<double> g) {
          return penalized_objective(spec, f, mu, th, g);
        };
        converged = minimize(obj, theta, cfg).converged;
      };
      for (double w : cfg.penalty_weight_schedule) run(w);
      while (ppt_eigen(theta).value < kPptTarget && mu * 10.0 <= kPenaltyCap) run(mu * 10.0);
      repair_ppt(theta);
    }
    const double err = loss(f, models::behavior_of(spec, theta));
    out.restart_errors.push_back(err);
    if (converged) ++out.restarts_converged;
    if (err < best) {
      best = err;
      out.best_theta = theta;
    }
  }

  out.fitted_behavior = models::behavior_of(spec, out.best_theta);
  out.train_error = loss(f, out.fitted_behavior);
  out.fitted_ns_delta = bell::ns_delta(out.fitted_behavior);
  out.fitted_chsh_max = bell::chsh_max(out.fitted_behavior);
  if (ppt) out.ppt_min_eigenvalue = ppt_eigen(out.best_theta).value;
  return out;
}

double gradient_check(const ModelSpec& spec, std::span<const double> theta, const EmpiricalFrequencies& f) {
  const std::size_t n = theta.size();
  ParamVector g(n), scratch(n), probe(theta.begin(), theta.end());
  loss_and_gradient(spec, theta, f, g);
  constexpr double h = 1e-6;
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    probe[k] = theta[k] + h;
    const double up = loss_and_gradient(spec, probe, f, scratch);
    probe[k] = theta[k] - h;
    const double down = loss_and_gradient(spec, probe, f, scratch);
    probe[k] = theta[k];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(g[k] - fd));
    scale = std::max(scale, std::abs(fd));
  }
  return worst / std::max(scale, 1e-6);
}

}  // namespace bellfit::fitting
