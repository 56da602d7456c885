// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "urllc/baselines.hpp"
#include "urllc/queueing.hpp"
#include "urllc/regnn.hpp"
#include "urllc/stochgeom.hpp"

using namespace urllc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(int v, int target, int tol) { return std::abs(v - target) <= tol; }

// Symmetric bipolar evaluation setup shared by criteria 2 to 4.
McOptions symmetric_mc(int realizations) {
  McOptions o;
  o.realizations = realizations;
  o.frames = 200;
  o.cutoff_m = 600.0;
  o.seed = 2024;
  return o;
}

constexpr double kSymmetricArea = 0.25;

QosEstimate symmetric_eval(double density, const PolicyMaker& policy, const McOptions& o) {
  SymmetricScenario sc;
  sc.density_per_km2 = density;
  return estimate_over_instances([sc](Rng& r) { return gen_bipolar(sc, kSymmetricArea, r); }, policy,
                                 QosSpec{}, o);
}

PolicyMaker uniform_policy(int n, int m) {
  return [n, m](const NetworkInstance& i) { return RepetitionPolicy::uniform(i.k_links(), n, m); };
}

void criterion1() {
  const auto t0 = Clock::now();
  SymmetricScenario sc;
  const EsResult a = exhaustive_search(sc, QosSpec{});
  sc.density_per_km2 = 56.0;
  const EsResult b = exhaustive_search(sc, QosSpec{});
  const double dt = seconds_since(t0);
  const bool ok = within(a.n0, 7, 1) && within(a.m0, 4, 1) && within(b.n0, 7, 1) &&
                  within(b.m0, 5, 1) && dt < 60.0;
  report(1, ok, format("rho=28 -> (%d,%d) [target (7,4)+-1], rho=56 -> (%d,%d) [target (7,5)+-1], %.3f s",
                       a.n0, a.m0, b.n0, b.m0, dt));
}

void criterion2and3() {
  const auto t0 = Clock::now();
  SymmetricScenario sc;
  const EsResult es28 = exhaustive_search(sc, QosSpec{});
  sc.density_per_km2 = 14.0;
  const EsResult es14 = exhaustive_search(sc, QosSpec{});
  const McOptions o = symmetric_mc(1000);
  const QosEstimate e28 = symmetric_eval(28.0, uniform_policy(es28.n0, es28.m0), o);
  const QosEstimate e14 = symmetric_eval(14.0, uniform_policy(es14.n0, es14.m0), o);
  const bool ok2 = e28.p_vio >= 0.5 * 0.0056 && e28.p_vio <= 2.0 * 0.0056 &&
                   e14.p_vio >= 0.5 * 0.0016 && e14.p_vio <= 2.0 * 0.0016;
  report(2, ok2,
         format("rho=28 (%d,%d): %.5f +- %.5f [0.0028, 0.0112]; rho=14 (%d,%d): %.5f +- %.5f "
                "[0.0008, 0.0032]; %.0f s",
                es28.n0, es28.m0, e28.p_vio, e28.std_error, es14.n0, es14.m0, e14.p_vio,
                e14.std_error, seconds_since(t0)));

  const QosEstimate single = symmetric_eval(28.0, uniform_policy(1, 1), o);
  const double gain = 1.0 - e28.p_vio / single.p_vio;
  const bool ok3 = single.p_vio >= 0.0615 / 2.0 && single.p_vio <= 0.0615 * 2.0 && gain >= 0.70;
  report(3, ok3,
         format("no-repetition %.5f +- %.5f [0.03075, 0.123]; random repetition improves by %.1f%% "
                "[>= 70%%]",
                single.p_vio, single.std_error, 100.0 * gain));
}

void criterion4() {
  McOptions o = symmetric_mc(300);
  o.activity = ActivityModel::pattern;
  std::vector<QosEstimate> est;
  std::string detail = "pattern activity, rho=28:";
  bool ok = true;
  for (int c = 1; c <= 5; ++c) {
    est.push_back(symmetric_eval(28.0, uniform_policy(c, c), o));
    detail += format(" c=%d %.4f+-%.4f", c, est.back().p_vio, est.back().std_error);
    if (c > 1) {
      const QosEstimate& a = est[c - 2];
      const QosEstimate& b = est[c - 1];
      const double se = std::hypot(a.std_error, b.std_error);
      ok = ok && b.p_vio >= a.p_vio - 3.0 * se;
    }
  }
  report(4, ok, detail);
}

// Mean of the first and last `window` entries.
std::pair<double, double> smoothed_ends(const std::vector<double>& trace, std::size_t window) {
  window = std::min(window, trace.size());
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += trace[i];
    tail += trace[trace.size() - 1 - i];
  }
  return {head / window, tail / window};
}

void criterion5and6() {
  const auto t0 = Clock::now();
  const QosSpec spec;
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.seed = 7;
  const auto hex = [](int regions) {
    HexOptions h;
    h.regions = regions;
    return [h](Rng& r) { return gen_hexagonal(h, r); };
  };
  const TrainState st = train(RegnnHyper{}, cfg, hex(1), spec);
  const double train_s = seconds_since(t0);
  const auto [head, tail] = smoothed_ends(st.loss_trace, 20);

  McOptions o;
  o.realizations = 100;
  o.frames = 1000;
  o.seed = 777;  // held-out instances, disjoint from the training streams
  const PolicyMaker regnn = [&](const NetworkInstance& i) { return regnn_policy(i, st.params, spec); };
  const PolicyMaker krep = [&](const NetworkInstance& i) { return k_repetition(i, spec); };
  const QosEstimate e_nr = estimate_over_instances(hex(1), no_repetition, spec, o);
  const QosEstimate e_kr = estimate_over_instances(hex(1), krep, spec, o);
  const QosEstimate e_rg = estimate_over_instances(hex(1), regnn, spec, o);
  const double g_nr = 1.0 - e_rg.p_vio / e_nr.p_vio;
  const double g_kr = 1.0 - e_rg.p_vio / e_kr.p_vio;
  const bool ok5 = head - tail >= 0.4 && g_nr >= 0.5 && g_kr >= 0.1;
  report(5, ok5,
         format("b=%d, %d iterations in %.0f s; smoothed loss %.3f -> %.3f (drop %.3f, need 0.4); "
                "no-rep %.5f, k-rep %.5f, trained %.5f; gain %.1f%% vs no-rep [>= 50%%], %.1f%% vs "
                "k-rep [>= 10%%]",
                cfg.batch, cfg.iterations, train_s, head, tail, head - tail, e_nr.p_vio, e_kr.p_vio,
                e_rg.p_vio, 100.0 * g_nr, 100.0 * g_kr));

  bool ok6 = true;
  std::string detail = format("K=25 %.5f", e_rg.p_vio);
  for (int regions : {2, 4}) {
    McOptions ok = o;
    ok.realizations = 100 / regions;  // same number of measured links
    const QosEstimate e = estimate_over_instances(hex(regions), regnn, spec, ok);
    const double rel = std::abs(e.p_vio / e_rg.p_vio - 1.0);
    ok6 = ok6 && rel < 0.2;
    detail += format("; K=%d %.5f (%.1f%%)", 25 * regions, e.p_vio, 100.0 * rel);
  }
  report(6, ok6, detail + " [< 20% relative]");
}

// Property suites, run independently of any reference number.
void criterion7() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* name) {
    if (!ok) failed.push_back(name);
  };

  {
    bool ok = true;
    const double h = 1e-6;
    for (double z : {0.0, 0.2, 0.7, 1.0})
      for (double xi : {0.05, 0.5, 0.95})
        for (double beta : {0.02, 0.3, 0.9}) {
          const TruncNormGrad g = truncnorm_logpdf_grad(z, xi, beta);
          const double fx = (truncnorm_logpdf_grad(z, xi + h, beta).logpdf -
                             truncnorm_logpdf_grad(z, xi - h, beta).logpdf) / (2 * h);
          const double fb = (truncnorm_logpdf_grad(z, xi, beta + h).logpdf -
                             truncnorm_logpdf_grad(z, xi, beta - h).logpdf) / (2 * h);
          ok = ok && std::abs(g.d_xi - fx) <= 1e-4 * std::max(1.0, std::abs(fx)) &&
               std::abs(g.d_beta - fb) <= 1e-4 * std::max(1.0, std::abs(fb));
        }
    check(ok, "truncnorm gradient");
  }
  {
    Rng rng(1);
    const NetworkInstance inst = gen_hexagonal(HexOptions{}, rng);
    RegnnHyper hy;
    hy.init_std = 0.3;
    const RegnnParams p = init_params(hy, rng);
    const CascadeSample s = cascade_forward(inst, p, rng);
    const Eigen::VectorXd g = backward(s, p, 1.0);
    const Eigen::VectorXd theta = flatten(p);
    Eigen::VectorXd fd(theta.size());
    RegnnParams w = p;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd t = theta;
      t(i) += 1e-6;
      unflatten(t, w);
      const double up = policy_log_prob(cascade_with_samples(inst, w, s.z1, s.z2));
      t(i) -= 2e-6;
      unflatten(t, w);
      const double dn = policy_log_prob(cascade_with_samples(inst, w, s.z1, s.z2));
      fd(i) = (up - dn) / 2e-6;
    }
    check((g - fd).norm() <= 1e-4 * fd.norm(), "backward gradient");

    // Equivariance under a link relabelling, invariance under a gain scale.
    Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(inst.k_links(), inst.k_links() - 1, 0);
    NetworkInstance q = inst;
    for (int a = 0; a < inst.k_links(); ++a) {
      q.arrival(a) = inst.arrival(perm(a));
      q.reuse_group(a) = inst.reuse_group(perm(a));
      for (int b = 0; b < inst.k_links(); ++b) q.gain(a, b) = inst.gain(perm(a), perm(b));
    }
    const CascadeSample m0 = cascade_mean(inst, p);
    const CascadeSample m1 = cascade_mean(q, p);
    bool eq = true;
    for (int a = 0; a < inst.k_links(); ++a)
      eq = eq && std::abs(m1.z1(a) - m0.z1(perm(a))) < 1e-12 && std::abs(m1.z2(a) - m0.z2(perm(a))) < 1e-12;
    check(eq, "permutation equivariance");
    NetworkInstance scaled = inst;
    scaled.gain *= 123.0;
    const CascadeSample m2 = cascade_mean(scaled, p);
    check((m2.z1 - m0.z1).norm() < 1e-10 && (m2.z2 - m0.z2).norm() < 1e-10, "gain-scale invariance");
  }
  {
    SymmetricScenario sc;
    const double gth = sir_threshold(1e-5, QosSpec{});
    const double intensity = sc.density_per_m2() * sc.lambda0 * 7;
    Rng rng(2);
    const long n = 10'000'000;
    double acc = 0.0;
    const double k = gth * std::pow(sc.r0_m, sc.alpha);
    for (long i = 0; i < n; ++i) {
      const double r2 = -std::log1p(-uniform01(rng)) / (std::numbers::pi * intensity);
      const double x = k / (r2 * r2);
      acc += x / (1.0 + x);
    }
    const double quad = 35.0 * approx_p_a2(make_approx_inputs(sc, 7, 4, gth));
    check(std::abs(quad / (acc / n) - 1.0) <= 0.005, "P_A2 quadrature vs nearest-interferer oracle");
  }
  {
    Rng rng(3);
    bool ok = true;
    for (long i = 0; i < 1'000'000; ++i) {
      const double eps_max = std::pow(10.0, -1.0 - 6.0 * uniform01(rng));
      const double eps_q = eps_max * uniform01(rng);
      std::vector<double> d(1 + static_cast<int>(uniform01(rng) * 6));
      double prod = 1.0;
      for (double& e : d) prod *= (e = std::pow(10.0, -8.0 * uniform01(rng)));
      if (loss_bound_check(eps_q, d, eps_max)) ok = ok && eps_q + prod <= eps_max;
    }
    check(ok, "loss bound implication");
  }
  {
    McOptions o = symmetric_mc(8);
    o.frames = 50;
    const QosEstimate a = symmetric_eval(28.0, uniform_policy(6, 3), o);
    const QosEstimate b = symmetric_eval(28.0, uniform_policy(6, 3), o);
    check(estimate_to_csv(a) == estimate_to_csv(b), "determinism");
  }
  {
    const QosSpec spec;
    bool ok = true;
    for (double lam : {0.01, 0.03, 0.05, 0.1}) {
      for (int d = 1; d < 9; ++d)
        ok = ok && queue_violation_prob(lam, d + 1, spec) >= queue_violation_prob(lam, d, spec);
      const int n = max_slots(lam, spec);
      ok = ok && queue_violation_prob(lam, n, spec) <= spec.eps_max &&
           queue_violation_prob(lam, n + 1, spec) > spec.eps_max;
    }
    check(ok, "queue monotonicity and max_slots bracketing");
  }
  {
    SymmetricScenario sc;
    const double gth = 2.5;
    const double base = std::numbers::pi * sc.density_per_m2() * sc.lambda0 * 7 * sc.r0_m * sc.r0_m *
                        std::sqrt(gth);
    check(std::abs(collision_prob(7, 4) * 35.0 - 1.0) < 1e-14, "Z = 1/35");
    check(std::abs(constant_c(sc, 7, gth) / base / (std::numbers::pi / 2) - 1.0) < 1e-12,
          "C gamma product pi/2");
  }

  std::string detail = failed.empty() ? "all property suites hold" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  report(7, failed.empty(), detail);
}

}  // namespace

int main() {
  criterion1();
  criterion2and3();
  criterion4();
  criterion5and6();
  criterion7();
  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
