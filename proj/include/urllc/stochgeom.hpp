#pragma once

#include <string>
#include <vector>

#include "urllc/linkphy.hpp"
#include "urllc/topology.hpp"

namespace urllc {

struct ApproxInputs {
  SymmetricScenario scenario;
  int n0 = 1;
  int m0 = 1;
  double gamma_th = 1.0;
  double constant_c = 0.0;
  double z_collision = 1.0;
};

double constant_c(const SymmetricScenario& scenario, int n0, double gamma_th);

// 1 / C(n0, m0) via the multiplicative form.
double collision_prob(int n0, int m0);

// Fills constant_c and z_collision from the other fields.
ApproxInputs make_approx_inputs(const SymmetricScenario& scenario, int n0, int m0, double gamma_th);

double approx_p_a1(const ApproxInputs& in);
double approx_p_a2(const ApproxInputs& in);

// Integral of f1(r) / (1 + gamma r0^alpha r^-alpha) over r > 0, where f1 is
// the nearest-point density of a PPP with the given per-m^2 intensity.
double nearest_interferer_integral(double intensity_per_m2, double gamma_th, double r0_m,
                                   double alpha);

struct EsPoint {
  int n0;
  int m0;
  double eps_q;
  double gamma_th;
  double p_a1;
  double p_a2;
  double objective;
};

struct EsResult {
  int n0 = 0;
  int m0 = 0;
  double objective = 0.0;
  std::vector<EsPoint> surface;
};

EsResult exhaustive_search(const SymmetricScenario& scenario, const QosSpec& spec);

std::string surface_to_csv(const EsResult& result);

// Sufficient condition: if the best copy meets eps_max - eps_q, the packet meets eps_max.
bool loss_bound_check(double eps_q, const std::vector<double>& eps_d, double eps_max);

}  // namespace urllc
