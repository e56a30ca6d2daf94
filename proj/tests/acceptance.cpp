// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bellfit/fitting.hpp"
#include "bellfit/models.hpp"
#include "bellfit/oracles.hpp"
#include "bellfit/scenarios.hpp"
#include "bellfit/traintest.hpp"

using namespace bellfit;
using models::ModelClass;
using models::ModelSpec;
using scenarios::ScenarioId;

namespace {

const double kTsirelson = 2.0 * std::sqrt(2.0);
const ModelSpec kCC{ModelClass::cCC};
const ModelSpec kQ{ModelClass::qCC};
const ModelSpec kSD{ModelClass::cSD0};
const ModelSpec kCE{ModelClass::cCE0};
const ModelSpec kNS{ModelClass::nsCC};
const ModelSpec kQppt{ModelClass::qCC, 4, models::Constraint::Ppt};

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

scenarios::ScenarioSpec scenario(ScenarioId id, std::uint64_t n, double noise = 0.0, double epsilon = 0.0,
                                 double strength = 0.0) {
  scenarios::ScenarioSpec s;
  s.id = id;
  s.trials_per_setting = n;
  s.noise = noise;
  s.epsilon = epsilon;
  s.signalling_strength = strength;
  return s;
}

std::vector<double> normal(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && secs >= limit_s) {
    o.pass = false;
    o.detail += " [over the " + std::to_string(limit_s) + " s budget]";
  }
  if (!o.pass) ++failures;
  std::printf("%s  C%-2d %-34s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

}  // namespace

int main() {
  criterion(1, "polytope oracles", 1.0, [] {
    const auto local = oracles::enumerate_local_vertices().vertices;
    const auto ns = oracles::enumerate_ns_vertices().vertices;
    double local_max = 0.0, ns_max = 0.0, worst_delta = 0.0;
    for (const auto& v : local) local_max = std::max(local_max, bell::chsh_max(v));
    for (const auto& v : ns) {
      ns_max = std::max(ns_max, bell::chsh_max(v));
      worst_delta = std::max(worst_delta, bell::ns_delta(v));
    }
    const bool ok = local.size() == 16 && std::abs(local_max - 2.0) <= 1e-9 && ns.size() == 24 &&
                    worst_delta <= 1e-12 && std::abs(ns_max - 4.0) <= 1e-12;
    return Outcome{ok, fmt("local %.0f vertices, bound %.12f; ns %.0f vertices, max %.12f", local.size(), local_max,
                           ns.size(), ns_max) +
                           fmt(", max ns_delta %.1e", worst_delta)};
  });

  criterion(2, "quantum image", 10.0, [] {
    models::ParamVector th(models::kQccParams, 0.0);
    const double r = 1.0 / std::sqrt(2.0);
    qmath::CMat g(4, 4);
    g(0, 0) = r;
    g(3, 0) = r;
    models::set_qcc_factor(th, g);
    // Projective effects along XZ-plane angles phi: U = exp(-i phi/2 Y).
    const double phi[4] = {0.0, M_PI / 2, M_PI / 4, -M_PI / 4};
    for (int k = 0; k < 4; ++k) {
      th[32 + 6 * k] = 40.0;
      th[33 + 6 * k] = -40.0;
      th[36 + 6 * k] = -phi[k] / 2.0;
    }
    const double s = bell::chsh(models::behavior_of(kQ, th));
    std::mt19937_64 rng(2024);
    double worst_chsh = 0.0, worst_delta = 0.0;
    for (int i = 0; i < 1000; ++i) {
      // Odd draws: pure state (rank-1 factor) and sharpened effect eigenvalues.
      auto draw = normal(rng, models::kQccParams);
      if (i % 2 == 1) {
        for (std::size_t k = 0; k < models::kQccStateParams; ++k)
          if ((k / 2) % 4 != 0) draw[k] = 0.0;
        for (std::size_t k = models::kQccStateParams; k < models::kQccParams; k += 6) {
          draw[k] = 40.0;
          draw[k + 1] = -40.0;
        }
      }
      const auto b = models::behavior_of(kQ, draw);
      worst_chsh = std::max(worst_chsh, bell::chsh_max(b));
      worst_delta = std::max(worst_delta, bell::ns_delta(b));
    }
    const bool ok = std::abs(s - kTsirelson) <= 1e-6 && worst_chsh <= kTsirelson + 1e-9 && worst_delta <= 1e-12;
    return Outcome{ok, fmt("Phi+ CHSH %.9f; 1000 draws max chsh %.9f, max ns_delta %.1e", s, worst_chsh,
                           worst_delta)};
  });

  criterion(3, "model inclusion witness", 0.0, [] {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto c = normal(rng, models::param_count(kCC));
      worst = std::max(worst, models::embedding_error(c, models::embed_ccc_into_qcc(c)));
    }
    return Outcome{worst <= 1e-9, fmt("100 cCC(d=4) draws, max cell error %.2e", worst)};
  });

  criterion(4, "entangled adjudication (E1)", 600.0, [] {
    const auto s = traintest::multi_seed_study({kCC, kQ}, scenario(ScenarioId::E1Entangled, 10000, 0.05), seeds(20),
                                               {}, jobs());
    const double gap = s.medians[0].train_error - s.medians[1].train_error;
    double worst = 0.0;
    for (const auto& r : s.records) worst = std::max(worst, r.fitted_chsh_max[0]);
    return Outcome{gap >= 0.01 && worst <= 2.0 + 1e-6,
                   fmt("median train cCC %.5f qCC %.5f gap %.5f; max cCC chsh %.9f", s.medians[0].train_error,
                       s.medians[1].train_error, gap, worst)};
  });

  // C5 and C6 share one study.
  traintest::StudySummary dephased;
  double dephased_secs = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      dephased = traintest::multi_seed_study({kCC, kQ, kSD, kCE}, scenario(ScenarioId::E2Dephased, 10000), seeds(50),
                                             {}, jobs());
    } catch (const std::exception& e) {
      std::printf("E2 study failed: %s\n", e.what());
    }
    dephased_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  const bool have_dephased = dephased.medians.size() == 4;

  criterion(5, "dephased replication (E2)", 1800.0 - dephased_secs, [&] {
    if (!have_dephased) return Outcome{false, "study did not run"};
    const auto& m = dephased.medians;
    const double f_sd = dephased.fraction(2, 1), f_ce = dephased.fraction(3, 1);
    const bool ok = f_sd >= 0.6 && f_ce >= 0.6 && m[2].train_error < m[0].train_error &&
                    m[3].train_error < m[0].train_error && m[2].test_error > m[0].test_error &&
                    m[3].test_error > m[0].test_error;
    return Outcome{ok, fmt("cSD0>qCC %.2f, cCE0>qCC %.2f; ", f_sd, f_ce) +
                           fmt("median train cCC %.3e cSD0 %.3e cCE0 %.3e; ", m[0].train_error, m[2].train_error,
                               m[3].train_error) +
                           fmt("median test cCC %.3e cSD0 %.3e cCE0 %.3e", m[0].test_error, m[2].test_error,
                               m[3].test_error) +
                           fmt("; study %.1f s", dephased_secs)};
  });

  criterion(6, "inclusion without overfitting", 0.0, [&] {
    if (!have_dephased) return Outcome{false, "study did not run"};
    const auto& m = dephased.medians;
    const double dtr = std::abs(m[1].train_error - m[0].train_error);
    const double dte = std::abs(m[1].test_error - m[0].test_error);
    const double qc = dephased.fraction(1, 0), cq = dephased.fraction(0, 1);
    return Outcome{dtr <= 1e-3 && dte <= 1e-3 && qc <= 0.2 && cq <= 0.2,
                   fmt("|d train| %.2e, |d test| %.2e; qCC>cCC %.2f, cCC>qCC %.2f", dtr, dte, qc, cq)};
  });

  criterion(7, "near-saturation overfitting (E3)", 1800.0, [] {
    const auto near = traintest::multi_seed_study({kCC, kQ, kQppt}, scenario(ScenarioId::E3NearSaturation, 1000, 0.0, 0.01),
                                                  seeds(100), {}, jobs());
    const auto control = traintest::multi_seed_study(
        {kCC, kQ}, scenario(ScenarioId::E3NearSaturation, 10000, 0.0, 0.3), seeds(100), {}, jobs());
    const double f = near.fraction(1, 0), f_ppt = near.fraction(2, 0), f_ctrl = control.fraction(1, 0);
    const bool ok = f >= 3.0 * f_ctrl && f > 0.0 && f_ppt <= 0.5 * f;
    return Outcome{ok, fmt("qCC>cCC %.2f vs control %.2f; qCC+ppt>cCC %.2f", f, f_ctrl, f_ppt)};
  });

  criterion(8, "Tsirelson scenario (E5)", 0.0, [] {
    const auto near = traintest::multi_seed_study({kQ, kNS}, scenario(ScenarioId::E5NearTsirelson, 1000, 0.0, 0.01),
                                                  seeds(100), {}, jobs());
    const auto control = traintest::multi_seed_study(
        {kQ, kNS}, scenario(ScenarioId::E5NearTsirelson, 10000, 0.0, kTsirelson - 2.5), seeds(100), {}, jobs());
    const double f = near.fraction(1, 0), f_ctrl = control.fraction(1, 0);
    return Outcome{f > 0.0 && f >= 3.0 * f_ctrl, fmt("nsCC>qCC %.2f vs control (chsh 2.5) %.2f", f, f_ctrl)};
  });

  criterion(9, "signalling truth (E4)", 0.0, [] {
    auto s = scenario(ScenarioId::E4Signalling, 1000000, 0.0, 0.0, 0.1);
    const auto g = scenarios::generate(s);
    const auto r = traintest::run({kSD, kCE, kCC, kQ}, g.train, g.test, {});
    const double sd = r.results[0].train_error, ce = r.results[1].train_error;
    const double cc = r.results[2].train_error, q = r.results[3].train_error;
    return Outcome{sd <= 1e-4 && ce <= 1e-4 && cc >= 1e-3 && q >= 1e-3,
                   fmt("train cSD0 %.2e cCE0 %.2e cCC %.2e qCC %.2e", sd, ce, cc, q)};
  });

  criterion(10, "optimizer soundness", 0.0, [] {
    std::mt19937_64 rng(10);
    double worst_grad = 0.0, worst_fit = 0.0;
    for (const auto& spec : {kCC, kSD, kCE, kQ, kNS}) {
      const std::size_t n = models::param_count(spec);
      for (int i = 0; i < 50; ++i) {
        const auto truth = models::behavior_of(spec, normal(rng, n));
        const auto f = bell::frequencies(bell::sample(truth, 1000, rng()));
        worst_grad = std::max(worst_grad, fitting::gradient_check(spec, normal(rng, n), f));
      }
      for (int i = 0; i < 5; ++i) {
        const auto truth = models::behavior_of(spec, normal(rng, n));
        const bell::EmpiricalFrequencies exact{truth.cells(), {0.25, 0.25, 0.25, 0.25}};
        fitting::FitConfig cfg;
        cfg.seed = rng();
        worst_fit = std::max(worst_fit, fitting::fit(spec, exact, cfg).train_error);
      }
    }
    return Outcome{worst_grad <= 1e-4 && worst_fit <= 1e-6,
                   fmt("max gradient_check %.2e over 250 points; max self-consistency error %.2e over 25 fits",
                       worst_grad, worst_fit)};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
