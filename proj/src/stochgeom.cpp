#include "urllc/stochgeom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "urllc/queueing.hpp"

namespace urllc {

namespace {

// 15-point Kronrod rule with its embedded 7-point Gauss rule.
constexpr double kXk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = kWk[7] * fc;
  double g = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * kXk[i];
    const double s = f(c - x) + f(c + x);
    k += kWk[i] * s;
    if (i % 2 == 1) g += kWg[i / 2] * s;
  }
  value = k * h;
  error = std::abs((k - g) * h);
}

template <class F>
double adaptive(F&& f, double a, double b, double rel_tol, int depth = 0) {
  double v = 0.0;
  double e = 0.0;
  gk15(f, a, b, v, e);
  if (e <= rel_tol * std::abs(v) || e < 1e-300 || depth > 40) return v;
  const double m = 0.5 * (a + b);
  return adaptive(f, a, m, rel_tol, depth + 1) + adaptive(f, m, b, rel_tol, depth + 1);
}

// Integral over u > 0 of e^-u * c / (u^(alpha/2) + c): the complement of the
// nearest-interferer integral after u = pi * intensity * r^2.
double complement_integral(double c, double alpha) {
  if (c <= 0.0) return 0.0;
  if (std::isinf(c)) return 1.0;
  const double half = 0.5 * alpha;
  auto f = [&](double u) {
    const double p = std::pow(u, half);
    return std::exp(-u) * c / (p + c);
  };
  // The integrand changes scale near u = c^(2/alpha); split there.
  constexpr double upper = 40.0;
  const double knee = std::pow(c, 1.0 / half);
  std::vector<double> cuts{0.0};
  for (double s : {0.1, 1.0, 10.0})
    if (s * knee > 0.0 && s * knee < upper) cuts.push_back(s * knee);
  cuts.push_back(upper);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) total += adaptive(f, cuts[i], cuts[i + 1], 1e-11);
  return std::clamp(total, 0.0, 1.0);
}

double scale_c(double intensity, double gamma_th, double r0, double alpha) {
  return gamma_th * std::pow(r0, alpha) * std::pow(std::numbers::pi * intensity, 0.5 * alpha);
}

}  // namespace

double constant_c(const SymmetricScenario& s, int n0, double gamma_th) {
  if (!(s.alpha > 2.0)) throw std::domain_error("constant_c: alpha must exceed 2");
  const double a = 2.0 / s.alpha;
  return std::numbers::pi * s.density_per_m2() * s.lambda0 * n0 * s.r0_m * s.r0_m *
         std::pow(gamma_th, a) * std::tgamma(1.0 + a) * std::tgamma(1.0 - a);
}

double collision_prob(int n0, int m0) {
  if (m0 < 1 || m0 > n0) throw std::domain_error("collision_prob: need 1 <= m0 <= n0");
  const int k = std::min(m0, n0 - m0);
  double inv = 1.0;
  for (int i = 1; i <= k; ++i) inv *= double(i) / double(n0 - k + i);
  return inv;
}

ApproxInputs make_approx_inputs(const SymmetricScenario& scenario, int n0, int m0, double gamma_th) {
  ApproxInputs in;
  in.scenario = scenario;
  in.n0 = n0;
  in.m0 = m0;
  in.gamma_th = gamma_th;
  in.constant_c = constant_c(scenario, n0, gamma_th);
  in.z_collision = collision_prob(n0, m0);
  return in;
}

double approx_p_a1(const ApproxInputs& in) {
  const double x = -std::expm1(-double(in.m0) / in.n0 * in.constant_c);
  return std::clamp(std::pow(x, in.m0), 0.0, 1.0);
}

double nearest_interferer_integral(double intensity, double gamma_th, double r0, double alpha) {
  return 1.0 - complement_integral(scale_c(intensity, gamma_th, r0, alpha), alpha);
}

double approx_p_a2(const ApproxInputs& in) {
  const SymmetricScenario& s = in.scenario;
  const double intensity = s.density_per_m2() * s.lambda0 * in.n0;
  const double comp = complement_integral(scale_c(intensity, in.gamma_th, s.r0_m, s.alpha), s.alpha);
  return std::clamp(in.z_collision * comp, 0.0, in.z_collision);
}

EsResult exhaustive_search(const SymmetricScenario& scenario, const QosSpec& spec) {
  scenario.validate();
  spec.validate();
  EsResult res;
  bool found = false;
  const int n_max = max_slots(scenario.lambda0, spec);
  for (int n0 = 1; n0 <= n_max; ++n0) {
    const double eps_q = queue_violation_prob(scenario.lambda0, n0, spec);
    if (eps_q >= spec.eps_max) continue;
    const double gamma_th = sir_threshold(spec.eps_max - eps_q, spec);
    const double c = constant_c(scenario, n0, gamma_th);
    const double intensity = scenario.density_per_m2() * scenario.lambda0 * n0;
    const double comp =
        complement_integral(scale_c(intensity, gamma_th, scenario.r0_m, scenario.alpha), scenario.alpha);
    for (int m0 = 1; m0 <= n0; ++m0) {
      EsPoint p{n0, m0, eps_q, gamma_th, 0.0, 0.0, 0.0};
      p.p_a1 = std::clamp(std::pow(-std::expm1(-double(m0) / n0 * c), m0), 0.0, 1.0);
      const double z = collision_prob(n0, m0);
      p.p_a2 = std::clamp(z * comp, 0.0, z);
      p.objective = std::max(p.p_a1, p.p_a2);
      res.surface.push_back(p);
      // Strict comparison keeps the smallest (n0, m0) on ties.
      if (!found || p.objective < res.objective) {
        found = true;
        res.n0 = n0;
        res.m0 = m0;
        res.objective = p.objective;
      }
    }
  }
  if (!found) throw InfeasibleError("exhaustive_search: no feasible (N0, M0)");
  return res;
}

std::string surface_to_csv(const EsResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "n0,m0,p_a1,p_a2,objective\n";
  for (const EsPoint& p : r.surface)
    out << p.n0 << ',' << p.m0 << ',' << p.p_a1 << ',' << p.p_a2 << ',' << p.objective << '\n';
  return out.str();
}

bool loss_bound_check(double eps_q, const std::vector<double>& eps_d, double eps_max) {
  if (eps_d.empty()) return false;
  return *std::min_element(eps_d.begin(), eps_d.end()) <= eps_max - eps_q;
}

}  // namespace urllc
