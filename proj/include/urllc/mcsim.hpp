#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "urllc/linkphy.hpp"
#include "urllc/topology.hpp"

namespace urllc {

struct RepetitionPolicy {
  Eigen::VectorXi n_slots;
  Eigen::VectorXi m_reps;

  static RepetitionPolicy uniform(int k_links, int n, int m) {
    return {Eigen::VectorXi::Constant(k_links, n), Eigen::VectorXi::Constant(k_links, m)};
  }
  int size() const { return static_cast<int>(n_slots.size()); }
  // Shape and 1 <= M <= N <= 64 checks; queue feasibility is left to the estimator.
  void validate(int k_links) const;
};

enum class ActivityModel {
  bernoulli,  // each interferer active per slot with probability lambda_i M_i
  pattern,    // busy with probability lambda_i N_i, then an M_i-subset of its N_i slots
};

enum class ViolationCriterion {
  overall,   // eps_q + prod eps_d > eps_max
  min_slot,  // min eps_d > eps_max - eps_q (the per-repetition SIR event)
};

struct McOptions {
  int realizations = 1000;
  int frames = 2000;
  std::uint64_t seed = 1;
  ActivityModel activity = ActivityModel::bernoulli;
  FadingKind fading = FadingKind::nakagami;
  bool refresh_per_slot = false;
  double cutoff_m = 500.0;
  bool nearest_only = false;  // only the nearest active interferer counts
  ViolationCriterion criterion = ViolationCriterion::overall;

  void validate() const;
};

struct QosEstimate {
  std::vector<int> links;  // instance link index of each entry of p_k
  Eigen::VectorXd p_k;
  double p_vio = 0.0;
  double std_error = 0.0;
  long trials = 0;  // frames simulated per link
  std::uint64_t seed = 0;
  std::vector<double> realization_p_vio;  // filled by the multi-instance estimator
};

// Uniform m-subset of {0..n-1} as a bitmask; n <= 64.
std::uint64_t select_slot_mask(int n, int m, Rng& rng);
// Sorted 0-based slot indices.
std::vector<int> select_slots(int n, int m, Rng& rng);

// SINR of link k.  `active` and `fading` are indexed by transmitter; entries
// for k itself and inactive transmitters are ignored.  Fading is the unit-mean
// normalized power gain.  Returns +inf when interference and noise vanish.
double sample_sinr(const NetworkInstance& instance, int k,
                   const std::vector<bool>& active, const std::vector<double>& fading,
                   const QosSpec& spec, bool with_noise = true);

// Product of per-slot decoding errors for one frame of link k, with the
// activity of every transmitter given per selected slot.
double packet_loss_prob(const NetworkInstance& instance, int k,
                        const std::vector<std::vector<bool>>& slot_active,
                        const std::vector<double>& fading, const QosSpec& spec);

// One random frame of link k: own slot choice, interferer activity and fading.
double packet_loss_prob(const NetworkInstance& instance, int k, const RepetitionPolicy& policy,
                        const QosSpec& spec, const McOptions& options, Rng& rng);

QosEstimate estimate_qos_violation(const NetworkInstance& instance,
                                   const RepetitionPolicy& policy, const QosSpec& spec,
                                   const McOptions& options);

using InstanceGenerator = std::function<NetworkInstance(Rng&)>;
using PolicyMaker = std::function<RepetitionPolicy(const NetworkInstance&)>;

// Draws one instance per realization and simulates options.frames frames per
// measured link; p_vio pools every measured link of every realization.
QosEstimate estimate_over_instances(const InstanceGenerator& generator,
                                    const PolicyMaker& policy, const QosSpec& spec,
                                    const McOptions& options);

// Training probe: log of max(P_vio, 1/(2 * trials * K)).
double probe_loss(const NetworkInstance& instance, const RepetitionPolicy& policy,
                  const QosSpec& spec, const McOptions& options);

std::string estimate_to_csv(const QosEstimate& estimate);
std::string estimate_to_json(const QosEstimate& estimate);

}  // namespace urllc
