#include "bellfit/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "bellfit/errors.hpp"
#include "bellfit/oracles.hpp"
#include "bellfit/rng.hpp"

namespace bellfit::models {

using bell::CellArray;
using bell::cell;
using qmath::CMat;
using qmath::cplx;
using qmath::logistic;

std::string to_string(ModelClass c) {
  switch (c) {
    case ModelClass::cCC: return "cCC";
    case ModelClass::qCC: return "qCC";
    case ModelClass::cSD0: return "cSD0";
    case ModelClass::cCE0: return "cCE0";
    case ModelClass::nsCC: return "nsCC";
  }
  return "?";
}

std::string to_string(Constraint c) { return c == Constraint::Ppt ? "ppt" : "none"; }

ModelClass class_from_string(const std::string& s) {
  for (auto c : {ModelClass::cCC, ModelClass::qCC, ModelClass::cSD0, ModelClass::cCE0, ModelClass::nsCC})
    if (s == to_string(c)) return c;
  throw InvalidArgument("unknown model class '" + s + "'");
}

Constraint constraint_from_string(const std::string& s) {
  if (s == "none") return Constraint::None;
  if (s == "ppt") return Constraint::Ppt;
  throw InvalidArgument("unknown constraint '" + s + "'");
}

void ModelSpec::validate() const {
  if (d < 1) throw InvalidArgument("ModelSpec: latent cardinality must be >= 1");
  if (constraint == Constraint::Ppt && cls != ModelClass::qCC) {
    throw InvalidArgument("ModelSpec: the ppt constraint applies only to qCC");
  }
}

std::string ModelSpec::label() const {
  std::string s = to_string(cls);
  if (is_classical() && d != 4) s += "(d=" + std::to_string(d) + ")";
  if (constraint == Constraint::Ppt) s += "+ppt";
  return s;
}

std::size_t param_count(const ModelSpec& spec) {
  spec.validate();
  switch (spec.cls) {
    case ModelClass::cCC: return 5 * spec.d;
    case ModelClass::cSD0: return 6 * spec.d;
    case ModelClass::cCE0: return 7 * spec.d;
    case ModelClass::qCC: return kQccParams;
    case ModelClass::nsCC: return 24;
  }
  return 0;
}

namespace {

void check_length(const ModelSpec& spec, std::span<const double> theta) {
  const auto n = param_count(spec);
  if (theta.size() != n) {
    throw ChartMismatch(spec.label() + " expects " + std::to_string(n) + " parameters, got " +
                        std::to_string(theta.size()));
  }
}

// In-place softmax over logits; returns probabilities.
std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

// dL/dlogits from dL/dp for p = softmax(logits).
void softmax_pullback(const std::vector<double>& p, const std::vector<double>& dp, std::span<double> out) {
  double mean = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) mean += p[k] * dp[k];
  for (std::size_t k = 0; k < p.size(); ++k) out[k] += p[k] * (dp[k] - mean);
}

// p(outcome | logit) for a binary variable.
inline double binary(double logit, int outcome) {
  const double s = logistic(logit);
  return outcome == 0 ? s : 1.0 - s;
}

// ---------------------------------------------------------------- cCC -----

CellArray ccc_vjp(std::size_t d, std::span<const double> th, const CellArray* g, std::span<double> grad) {
  const auto prior = softmax(th.subspan(0, d));
  const auto alice = [&](int x, std::size_t l) { return logistic(th[d + x * d + l]); };
  const auto bob = [&](int y, std::size_t l) { return logistic(th[3 * d + y * d + l]); };
  CellArray p{};
  std::vector<double> dprior(g ? d : 0, 0.0);
  for (std::size_t l = 0; l < d; ++l) {
    const double a0[2] = {alice(0, l), alice(1, l)};
    const double b0[2] = {bob(0, l), bob(1, l)};
    double da[2] = {0.0, 0.0};
    double db[2] = {0.0, 0.0};
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const double pa = a == 0 ? a0[x] : 1.0 - a0[x];
            const double pb = b == 0 ? b0[y] : 1.0 - b0[y];
            p[cell(x, y, a, b)] += prior[l] * pa * pb;
            if (g) {
              const double gc = (*g)[cell(x, y, a, b)];
              dprior[l] += gc * pa * pb;
              da[x] += gc * prior[l] * pb * (a == 0 ? 1.0 : -1.0);
              db[y] += gc * prior[l] * pa * (b == 0 ? 1.0 : -1.0);
            }
          }
    if (g) {
      for (int x = 0; x < 2; ++x) grad[d + x * d + l] += da[x] * a0[x] * (1.0 - a0[x]);
      for (int y = 0; y < 2; ++y) grad[3 * d + y * d + l] += db[y] * b0[y] * (1.0 - b0[y]);
    }
  }
  if (g) softmax_pullback(prior, dprior, grad.subspan(0, d));
  return p;
}

// --------------------------------------------------------------- cSD0 -----
// p(a,b|x,y) = sum_l q_x(l) p(a|x,l) p(b|y,l), q_x(l) = pi_l s_l(x) / Z_x.

CellArray csd_vjp(std::size_t d, std::span<const double> th, const CellArray* g, std::span<double> grad) {
  const auto prior = softmax(th.subspan(0, d));
  const auto sel = [&](int x, std::size_t l) { return binary(th[d + l], x); };
  const auto alice = [&](int x, std::size_t l) { return logistic(th[2 * d + x * d + l]); };
  const auto bob = [&](int y, std::size_t l) { return logistic(th[4 * d + y * d + l]); };

  CellArray p{};
  std::vector<double> dprior(d, 0.0);
  std::vector<double> dsel0(d, 0.0);  // dL/d s_l(0); s_l(1) = 1 - s_l(0)
  for (int x = 0; x < 2; ++x) {
    double z = 0.0;
    for (std::size_t l = 0; l < d; ++l) z += prior[l] * sel(x, l);
    std::vector<double> q(d);
    for (std::size_t l = 0; l < d; ++l) q[l] = prior[l] * sel(x, l) / z;

    std::vector<double> gq(d, 0.0);  // dL/dq_x(l)
    for (std::size_t l = 0; l < d; ++l) {
      const double ax = alice(x, l);
      double dax = 0.0;
      for (int y = 0; y < 2; ++y) {
        const double by = bob(y, l);
        double dby = 0.0;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const double pa = a == 0 ? ax : 1.0 - ax;
            const double pb = b == 0 ? by : 1.0 - by;
            p[cell(x, y, a, b)] += q[l] * pa * pb;
            if (g) {
              const double gc = (*g)[cell(x, y, a, b)];
              gq[l] += gc * pa * pb;
              dax += gc * q[l] * pb * (a == 0 ? 1.0 : -1.0);
              dby += gc * q[l] * pa * (b == 0 ? 1.0 : -1.0);
            }
          }
        if (g) grad[4 * d + y * d + l] += dby * by * (1.0 - by);
      }
      if (g) grad[2 * d + x * d + l] += dax * ax * (1.0 - ax);
    }
    if (g) {
      double mean = 0.0;
      for (std::size_t l = 0; l < d; ++l) mean += q[l] * gq[l];
      for (std::size_t l = 0; l < d; ++l) {
        const double dr = (gq[l] - mean) / z;  // dL/d(pi_l s_l(x))
        dprior[l] += dr * sel(x, l);
        dsel0[l] += dr * prior[l] * (x == 0 ? 1.0 : -1.0);
      }
    }
  }
  if (g) {
    softmax_pullback(prior, dprior, grad.subspan(0, d));
    for (std::size_t l = 0; l < d; ++l) {
      const double s = logistic(th[d + l]);
      grad[d + l] += dsel0[l] * s * (1.0 - s);
    }
  }
  return p;
}

// --------------------------------------------------------------- cCE0 -----

CellArray cce_vjp(std::size_t d, std::span<const double> th, const CellArray* g, std::span<double> grad) {
  const auto prior = softmax(th.subspan(0, d));
  const auto alice_idx = [&](int x, std::size_t l) { return d + x * d + l; };
  const auto bob_idx = [&](int x, int y, std::size_t l) { return 3 * d + static_cast<std::size_t>(2 * x + y) * d + l; };
  CellArray p{};
  std::vector<double> dprior(g ? d : 0, 0.0);
  for (std::size_t l = 0; l < d; ++l) {
    for (int x = 0; x < 2; ++x) {
      const double ax = logistic(th[alice_idx(x, l)]);
      double dax = 0.0;
      for (int y = 0; y < 2; ++y) {
        const double bxy = logistic(th[bob_idx(x, y, l)]);
        double db = 0.0;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const double pa = a == 0 ? ax : 1.0 - ax;
            const double pb = b == 0 ? bxy : 1.0 - bxy;
            p[cell(x, y, a, b)] += prior[l] * pa * pb;
            if (g) {
              const double gc = (*g)[cell(x, y, a, b)];
              dprior[l] += gc * pa * pb;
              dax += gc * prior[l] * pb * (a == 0 ? 1.0 : -1.0);
              db += gc * prior[l] * pa * (b == 0 ? 1.0 : -1.0);
            }
          }
        if (g) grad[bob_idx(x, y, l)] += db * bxy * (1.0 - bxy);
      }
      if (g) grad[alice_idx(x, l)] += dax * ax * (1.0 - ax);
    }
  }
  if (g) softmax_pullback(prior, dprior, grad.subspan(0, d));
  return p;
}

// --------------------------------------------------------------- nsCC -----

const std::vector<bell::Behavior>& ns_vertices() {
  static const std::vector<bell::Behavior> v = oracles::enumerate_ns_vertices().vertices;
  return v;
}

CellArray nscc_vjp(std::span<const double> th, const CellArray* g, std::span<double> grad) {
  const auto& verts = ns_vertices();
  const auto w = softmax(th);
  CellArray p{};
  for (std::size_t k = 0; k < verts.size(); ++k)
    for (std::size_t c = 0; c < bell::kCells; ++c) p[c] += w[k] * verts[k].cells()[c];
  if (g) {
    std::vector<double> dw(verts.size(), 0.0);
    for (std::size_t k = 0; k < verts.size(); ++k)
      for (std::size_t c = 0; c < bell::kCells; ++c) dw[k] += (*g)[c] * verts[k].cells()[c];
    softmax_pullback(w, dw, grad);
  }
  return p;
}

// ---------------------------------------------------------------- qCC -----

// Effect chart pieces: E = U diag(s1, s2) U^dagger, U = e^{i h0} V,
// V = cos|h| I + i sinc(|h|) h.sigma.
struct EffectChart {
  CMat u;
  double s[2];
  CMat e0;
};

EffectChart effect_chart(std::span<const double> t) {
  EffectChart c;
  c.u = qmath::unitary_from_generator(t[2], t[3], t[4], t[5]);
  c.s[0] = logistic(t[0]);
  c.s[1] = logistic(t[1]);
  c.e0 = c.u * CMat::diag({c.s[0], c.s[1]}) * c.u.adjoint();
  c.e0 = (c.e0 + c.e0.adjoint()) * 0.5;
  return c;
}

// Writes dL/dt for one effect, given dL = Re tr(K dE).
void effect_pullback(std::span<const double> t, const EffectChart& c, const CMat& k, std::span<double> out) {
  const CMat ku = c.u.adjoint() * k * c.u;
  out[0] += ku(0, 0).real() * c.s[0] * (1.0 - c.s[0]);
  out[1] += ku(1, 1).real() * c.s[1] * (1.0 - c.s[1]);
  // h0 only moves a global phase of U, which cancels.
  const double hx = t[3], hy = t[4], hz = t[5];
  const double th2 = hx * hx + hy * hy + hz * hz;
  const double th = std::sqrt(th2);
  double sinc, q;
  if (th < 1e-4) {
    sinc = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
    q = -1.0 / 3.0 + th2 / 30.0;
  } else {
    sinc = std::sin(th) / th;
    q = (th * std::cos(th) - std::sin(th)) / (th2 * th);
  }
  const cplx i(0.0, 1.0);
  const cplx phase = std::exp(i * t[2]);
  const CMat hs = qmath::pauli_x() * hx + qmath::pauli_y() * hy + qmath::pauli_z() * hz;
  const CMat sig[3] = {qmath::pauli_x(), qmath::pauli_y(), qmath::pauli_z()};
  const double h[3] = {hx, hy, hz};
  const CMat d = CMat::diag({c.s[0], c.s[1]});
  const CMat dud = d * c.u.adjoint();
  for (int j = 0; j < 3; ++j) {
    CMat du = CMat::identity(2) * (-sinc * h[j]) + hs * (i * q * h[j]) + sig[j] * (i * sinc);
    du *= phase;
    out[static_cast<std::size_t>(3 + j)] += 2.0 * (k * du * dud).trace().real();
  }
}

// Partial traces of rho (I (x) F) over B, and of rho (E (x) I) over A.
CMat reduce_b(const CMat& rho, const CMat& f) {
  CMat r(2, 2);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t a2 = 0; a2 < 2; ++a2) {
      cplx s = 0.0;
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t b2 = 0; b2 < 2; ++b2) s += rho(2 * a + b, 2 * a2 + b2) * f(b2, b);
      r(a, a2) = s;
    }
  return r;
}

CMat reduce_a(const CMat& rho, const CMat& e) {
  CMat r(2, 2);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t b2 = 0; b2 < 2; ++b2) {
      cplx s = 0.0;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t a2 = 0; a2 < 2; ++a2) s += rho(2 * a + b, 2 * a2 + b2) * e(a2, a);
      r(b, b2) = s;
    }
  return r;
}

double tr_prod(const CMat& a, const CMat& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
  return s.real();
}

CellArray qcc_vjp(std::span<const double> th, const CellArray* g, std::span<double> grad, const CMat* state_cot) {
  const CMat gm = qcc_factor(th);
  CMat s = gm * gm.adjoint();
  const double t = s.trace().real();
  if (!(t >= 1e-300)) throw DegenerateFactor("qCC: trace(g g^dagger) underflows");
  const CMat rho = s * (1.0 / t);

  EffectChart ea[2] = {effect_chart(th.subspan(32, 6)), effect_chart(th.subspan(38, 6))};
  EffectChart fb[2] = {effect_chart(th.subspan(44, 6)), effect_chart(th.subspan(50, 6))};

  // R_y = tr_B[rho (I (x) F_y)], rho_A = tr_B rho, and similarly for Bob.
  const CMat rb[2] = {reduce_b(rho, fb[0].e0), reduce_b(rho, fb[1].e0)};
  const CMat ra[2] = {reduce_a(rho, ea[0].e0), reduce_a(rho, ea[1].e0)};
  const CMat rho_a = reduce_b(rho, CMat::identity(2));
  const CMat rho_b = reduce_a(rho, CMat::identity(2));

  double pa0[2], pb0[2];
  for (int x = 0; x < 2; ++x) pa0[x] = tr_prod(rho_a, ea[x].e0);
  for (int y = 0; y < 2; ++y) pb0[y] = tr_prod(rho_b, fb[y].e0);

  CellArray p{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double p00 = tr_prod(rb[y], ea[x].e0);
      p[cell(x, y, 0, 0)] = p00;
      p[cell(x, y, 0, 1)] = pa0[x] - p00;
      p[cell(x, y, 1, 0)] = pb0[y] - p00;
      p[cell(x, y, 1, 1)] = 1.0 - pa0[x] - pb0[y] + p00;
    }
  if (!g && !state_cot) return p;

  CMat m(4, 4);  // cotangent of rho
  CMat ka[2] = {CMat(2, 2), CMat(2, 2)};
  CMat kb[2] = {CMat(2, 2), CMat(2, 2)};
  if (g) {
    const CMat id2 = CMat::identity(2);
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const auto& gg = *g;
        const double c00 = gg[cell(x, y, 0, 0)] - gg[cell(x, y, 0, 1)] - gg[cell(x, y, 1, 0)] + gg[cell(x, y, 1, 1)];
        const double ca = gg[cell(x, y, 0, 1)] - gg[cell(x, y, 1, 1)];
        const double cb = gg[cell(x, y, 1, 0)] - gg[cell(x, y, 1, 1)];
        m += qmath::kron(ea[x].e0, fb[y].e0) * c00;
        m += qmath::kron(ea[x].e0, id2) * ca;
        m += qmath::kron(id2, fb[y].e0) * cb;
        ka[x] += rb[y] * c00 + rho_a * ca;
        kb[y] += ra[x] * c00 + rho_b * cb;
      }
    for (int x = 0; x < 2; ++x) effect_pullback(th.subspan(32 + 6 * x, 6), ea[x], ka[x], grad.subspan(32 + 6 * x, 6));
    for (int y = 0; y < 2; ++y) effect_pullback(th.subspan(44 + 6 * y, 6), fb[y], kb[y], grad.subspan(44 + 6 * y, 6));
  }
  if (state_cot) m += *state_cot;

  // d tr(rho M) = Re tr(B dG), B = 2 G^dagger (M - c I) / t.
  const double c = tr_prod(rho, m);
  const CMat bmat = gm.adjoint() * (m - CMat::identity(4) * c) * (2.0 / t);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      grad[2 * (4 * i + j)] += bmat(j, i).real();
      grad[2 * (4 * i + j) + 1] -= bmat(j, i).imag();
    }
  return p;
}

CellArray dispatch(const ModelSpec& spec, std::span<const double> theta, const CellArray* g, std::span<double> grad,
                   const CMat* state_cot) {
  switch (spec.cls) {
    case ModelClass::cCC: return ccc_vjp(spec.d, theta, g, grad);
    case ModelClass::cSD0: return csd_vjp(spec.d, theta, g, grad);
    case ModelClass::cCE0: return cce_vjp(spec.d, theta, g, grad);
    case ModelClass::nsCC: return nscc_vjp(theta, g, grad);
    case ModelClass::qCC: return qcc_vjp(theta, g, grad, state_cot);
  }
  return {};
}

}  // namespace

CellArray behavior_cells(const ModelSpec& spec, std::span<const double> theta) {
  check_length(spec, theta);
  return dispatch(spec, theta, nullptr, {}, nullptr);
}

bell::Behavior behavior_of(const ModelSpec& spec, std::span<const double> theta) {
  for (double v : theta)
    if (!std::isfinite(v)) throw InvalidArgument("behavior_of: non-finite parameter");
  auto p = behavior_cells(spec, theta);
  // Subtractive cells of qCC can round a hair below zero.
  for (auto& v : p) v = std::clamp(v, 0.0, 1.0);
  return bell::Behavior(p);
}

CellArray behavior_vjp(const ModelSpec& spec, std::span<const double> theta, const CellArray& dloss_dp,
                       std::span<double> grad, const CMat* state_cotangent) {
  check_length(spec, theta);
  if (grad.size() != theta.size()) throw ChartMismatch("behavior_vjp: gradient buffer has the wrong length");
  if (state_cotangent && spec.cls != ModelClass::qCC) {
    throw InvalidArgument("behavior_vjp: a state cotangent only applies to qCC");
  }
  return dispatch(spec, theta, &dloss_dp, grad, state_cotangent);
}

CMat qcc_factor(std::span<const double> theta) {
  if (theta.size() < kQccStateParams) throw ChartMismatch("qcc_factor: need at least 32 parameters");
  CMat g(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) g(i, j) = cplx(theta[2 * (4 * i + j)], theta[2 * (4 * i + j) + 1]);
  return g;
}

qmath::DensityMatrix qcc_state(std::span<const double> theta) { return qmath::state_from_factor(qcc_factor(theta)); }

void set_qcc_factor(std::span<double> theta, const CMat& g) {
  if (theta.size() < kQccStateParams || g.rows() != 4 || g.cols() != 4) {
    throw ChartMismatch("set_qcc_factor: need a 4x4 factor and 32 slots");
  }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      theta[2 * (4 * i + j)] = g(i, j).real();
      theta[2 * (4 * i + j) + 1] = g(i, j).imag();
    }
}

ParamVector witness_signalling_params(ModelClass cls) {
  constexpr std::size_t d = 4;
  constexpr double big = 30.0;
  if (cls == ModelClass::cCE0) {
    // Bob outputs b = x regardless of y and lambda: maximal signalling.
    ParamVector th(7 * d, 0.0);
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (std::size_t l = 0; l < d; ++l) th[3 * d + static_cast<std::size_t>(2 * x + y) * d + l] = x == 0 ? big : -big;
    return th;
  }
  if (cls == ModelClass::cSD0) {
    // x = 0 exactly when lambda is even; Bob's outcome reveals lambda's parity.
    ParamVector th(6 * d, 0.0);
    for (std::size_t l = 0; l < d; ++l) {
      const bool even = l % 2 == 0;
      th[d + l] = even ? big : -big;
      for (int y = 0; y < 2; ++y) th[4 * d + static_cast<std::size_t>(y) * d + l] = even ? big : -big;
    }
    return th;
  }
  throw InvalidArgument("witness_signalling_params: only cSD0 and cCE0 can signal");
}

namespace {

// Solves (J J^T + mu I) z = r for the 16x16 SPD system by Cholesky.
std::array<double, bell::kCells> solve_spd(std::array<std::array<double, bell::kCells>, bell::kCells> a,
                                           std::array<double, bell::kCells> r) {
  constexpr std::size_t n = bell::kCells;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    d = std::sqrt(std::max(d, 1e-300));
    a[j][j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i][k] * a[j][k];
      a[i][j] = v / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) r[i] -= a[i][k] * r[k];
    r[i] /= a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) r[i] -= a[k][i] * r[k];
    r[i] /= a[i][i];
  }
  return r;
}

double sq_norm(const CellArray& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

// Levenberg-Marquardt on the cell residuals p_qCC(theta) - target.
double match_cells(const CellArray& target, ParamVector& theta) {
  const ModelSpec q{ModelClass::qCC};
  const auto residual = [&](std::span<const double> th) {
    CellArray r = behavior_cells(q, th);
    for (std::size_t c = 0; c < bell::kCells; ++c) r[c] -= target[c];
    return r;
  };
  CellArray r = residual(theta);
  double cost = sq_norm(r);
  double mu = 1e-3;
  std::vector<std::array<double, kQccParams>> jac(bell::kCells);
  for (int it = 0; it < 400 && cost > 1e-30; ++it) {
    for (std::size_t c = 0; c < bell::kCells; ++c) {
      CellArray e{};
      e[c] = 1.0;
      jac[c].fill(0.0);
      behavior_vjp(q, theta, e, jac[c]);
    }
    std::array<std::array<double, bell::kCells>, bell::kCells> jjt{};
    for (std::size_t i = 0; i < bell::kCells; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < kQccParams; ++k) s += jac[i][k] * jac[j][k];
        jjt[i][j] = jjt[j][i] = s;
      }
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      auto a = jjt;
      for (std::size_t i = 0; i < bell::kCells; ++i) a[i][i] += mu;
      const auto z = solve_spd(a, r);
      ParamVector next = theta;
      for (std::size_t k = 0; k < kQccParams; ++k)
        for (std::size_t c = 0; c < bell::kCells; ++c) next[k] -= jac[c][k] * z[c];
      const CellArray rn = residual(next);
      const double cn = sq_norm(rn);
      if (cn < cost) {
        theta.swap(next);
        r = rn;
        cost = cn;
        mu = std::max(mu / 3.0, 1e-15);
        improved = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!improved) break;
  }
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace

ParamVector embed_ccc_into_qcc(std::span<const double> theta_ccc, std::size_t d) {
  if (d != 4) throw UnsupportedCardinality("embed_ccc_into_qcc: the two-qubit register holds exactly d = 4");
  const ModelSpec c{ModelClass::cCC, d};
  check_length(c, theta_ccc);
  for (double v : theta_ccc)
    if (!std::isfinite(v)) throw InvalidArgument("embed_ccc_into_qcc: non-finite parameter");

  // Register |l> = |l_A l_B> with l = 2 l_A + l_B, populated by p(l). Alice's
  // effects are diagonal in l_A and Bob's in l_B, which is exact whenever her
  // response depends on l_A alone and his on l_B alone; the response
  // averaged over the other half seeds the general case.
  const auto prior = softmax(theta_ccc.subspan(0, d));
  ParamVector out(kQccParams, 0.0);
  CMat g(4, 4);
  for (std::size_t l = 0; l < 4; ++l) g(l, l) = std::sqrt(prior[l]);
  set_qcc_factor(out, g);
  const auto logit = [](double p) {
    p = std::clamp(p, 1e-15, 1.0 - 1e-15);
    return std::log(p / (1.0 - p));
  };
  bool exact = true;
  for (int x = 0; x < 2; ++x)
    for (std::size_t half = 0; half < 2; ++half) {
      // Alice: l = 2 half + lb.
      const double t0 = theta_ccc[d + x * d + 2 * half];
      const double t1 = theta_ccc[d + x * d + 2 * half + 1];
      exact = exact && t0 == t1;
      const double w0 = prior[2 * half], w1 = prior[2 * half + 1];
      out[32 + 6 * static_cast<std::size_t>(x) + half] =
          t0 == t1 ? t0 : logit((w0 * logistic(t0) + w1 * logistic(t1)) / (w0 + w1));
    }
  for (int y = 0; y < 2; ++y)
    for (std::size_t half = 0; half < 2; ++half) {
      // Bob: l = 2 la + half.
      const double t0 = theta_ccc[3 * d + y * d + half];
      const double t1 = theta_ccc[3 * d + y * d + 2 + half];
      exact = exact && t0 == t1;
      const double w0 = prior[half], w1 = prior[2 + half];
      out[44 + 6 * static_cast<std::size_t>(y) + half] =
          t0 == t1 ? t0 : logit((w0 * logistic(t0) + w1 * logistic(t1)) / (w0 + w1));
    }
  if (exact) return out;

  // General responses: solve for a two-qubit realization of the same cells.
  const CellArray target = behavior_cells(c, theta_ccc);
  ParamVector best = out;
  double best_err = match_cells(target, best);
  Rng rng(derive_seed(0x656d626564ULL, static_cast<std::uint64_t>(0)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 64 && best_err > 1e-12; ++attempt) {
    ParamVector trial = out;
    for (auto& v : trial) v += 0.5 * normal(rng);
    const double err = match_cells(target, trial);
    if (err < best_err) {
      best_err = err;
      best = std::move(trial);
    }
  }
  return best;
}

double embedding_error(std::span<const double> theta_ccc, std::span<const double> theta_qcc) {
  const auto pc = behavior_cells(ModelSpec{ModelClass::cCC, 4}, theta_ccc);
  const auto pq = behavior_cells(ModelSpec{ModelClass::qCC}, theta_qcc);
  double err = 0.0;
  for (std::size_t c = 0; c < bell::kCells; ++c) err = std::max(err, std::abs(pc[c] - pq[c]));
  return err;
}

}  // namespace bellfit::models
