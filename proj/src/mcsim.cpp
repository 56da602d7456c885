#include "urllc/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "urllc/queueing.hpp"

namespace urllc {

void RepetitionPolicy::validate(int k_links) const {
  if (n_slots.size() != k_links || m_reps.size() != k_links)
    throw ConfigError("policy: expected " + std::to_string(k_links) + " links, got " +
                      std::to_string(n_slots.size()));
  for (int k = 0; k < k_links; ++k)
    if (m_reps(k) < 1 || m_reps(k) > n_slots(k) || n_slots(k) > 64)
      throw ConfigError("policy: link " + std::to_string(k) + " needs 1 <= M <= N <= 64 (N=" +
                        std::to_string(n_slots(k)) + ", M=" + std::to_string(m_reps(k)) + ")");
}

void McOptions::validate() const {
  if (realizations < 1) throw ConfigError("mc.realizations must be >= 1");
  if (frames < 1) throw ConfigError("mc.frames must be >= 1");
  if (!(cutoff_m > 0.0)) throw ConfigError("mc.cutoff_m must be positive");
}

std::uint64_t select_slot_mask(int n, int m, Rng& rng) {
  if (n < 1 || n > 64 || m < 1 || m > n) throw std::domain_error("select_slots: need 1 <= m <= n <= 64");
  if (m == n) return n == 64 ? ~0ULL : ((1ULL << n) - 1);
  // Partial Fisher-Yates over the slot indices.
  std::uint8_t slots[64];
  for (int i = 0; i < n; ++i) slots[i] = static_cast<std::uint8_t>(i);
  std::uint64_t mask = 0;
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(uniform01(rng) * (n - i));
    std::swap(slots[i], slots[j]);
    mask |= 1ULL << slots[i];
  }
  return mask;
}

std::vector<int> select_slots(int n, int m, Rng& rng) {
  const std::uint64_t mask = select_slot_mask(n, m, rng);
  std::vector<int> out;
  for (int t = 0; t < n; ++t)
    if ((mask >> t) & 1ULL) out.push_back(t);
  return out;
}

double sample_sinr(const NetworkInstance& instance, int k, const std::vector<bool>& active,
                   const std::vector<double>& fading, const QosSpec& spec, bool with_noise) {
  const double p = spec.tx_power_w();
  double interference = with_noise ? spec.noise_w(instance.bandwidth_hz(k)) : 0.0;
  for (int i = 0; i < instance.k_links(); ++i)
    if (i != k && active[i]) interference += p * instance.gain(i, k) * fading[i];
  const double signal = p * instance.gain(k, k) * fading[k];
  if (interference <= 0.0) return std::numeric_limits<double>::infinity();
  return signal / interference;
}

double packet_loss_prob(const NetworkInstance& instance, int k,
                        const std::vector<std::vector<bool>>& slot_active,
                        const std::vector<double>& fading, const QosSpec& spec) {
  const double n = spec.slot_ms * 1e-3 * instance.bandwidth_hz(k);
  double loss = 1.0;
  for (const auto& active : slot_active)
    loss *= decoding_error_prob(sample_sinr(instance, k, active, fading, spec), n, spec.packet_bits);
  return loss;
}

namespace {

struct Interferer {
  double power_gain;  // p * mu_ik
  double activity;    // per-slot probability in Bernoulli mode
  double busy;        // frame probability in pattern mode
  int n_slots;
  int m_reps;
};

// Frame-level simulator for one tagged link; interferers sorted by distance.
class LinkSim {
 public:
  LinkSim(const NetworkInstance& inst, int k, const RepetitionPolicy& policy,
          const QosSpec& spec, const McOptions& opt,
          const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>* mask)
      : opt_(opt),
        spec_(spec),
        n_(policy.n_slots(k)),
        m_(policy.m_reps(k)),
        gamma_(double(spec.n_tx_antennas) * spec.nakagami_m, 1.0 / spec.nakagami_m) {
    const double p = spec.tx_power_w();
    signal_ = p * inst.gain(k, k);
    noise_ = spec.noise_w(inst.bandwidth_hz(k));
    blocklength_ = spec.slot_ms * 1e-3 * inst.bandwidth_hz(k);
    eps_q_ = queue_violation_prob(inst.arrival(k), n_, spec);
    std::vector<std::pair<double, int>> near;
    for (int i = 0; i < inst.k_links(); ++i) {
      if (i == k) continue;
      if (mask) {
        if (!(*mask)(i, k)) continue;
      } else if (inst.reuse_group(i) != inst.reuse_group(k)) {
        continue;
      }
      const double d = inst.distance(i, k);
      if (d <= opt.cutoff_m) near.emplace_back(d, i);
    }
    std::sort(near.begin(), near.end());
    for (const auto& [d, i] : near) {
      const double lam = inst.arrival(i);
      interferers_.push_back({p * inst.gain(i, k), std::min(1.0, lam * policy.m_reps(i)),
                              std::min(1.0, lam * policy.n_slots(i)), policy.n_slots(i),
                              policy.m_reps(i)});
    }
    fading_.resize(interferers_.size());
    drawn_.resize(interferers_.size());
    pattern_.resize(interferers_.size());
  }

  double eps_q() const { return eps_q_; }
  bool hopeless() const { return eps_q_ > spec_.eps_max || !(spec_.eps_max - eps_q_ > 0.0); }

  // Returns the frame loss eps_c and sets `violated`.
  double frame(Rng& rng, bool& violated) {
    std::uint64_t own = 0;
    if (opt_.activity == ActivityModel::pattern) {
      own = select_slot_mask(n_, m_, rng);
      for (std::size_t j = 0; j < interferers_.size(); ++j) {
        const Interferer& in = interferers_[j];
        pattern_[j] = uniform01(rng) < in.busy ? select_slot_mask(in.n_slots, in.m_reps, rng) : 0;
      }
    }
    double g0 = draw(rng);
    std::fill(drawn_.begin(), drawn_.end(), false);
    double loss = 1.0;
    double min_ed = 1.0;
    for (int s = 0, t = 0; s < m_; ++s, ++t) {
      if (opt_.activity == ActivityModel::pattern)
        while (!((own >> t) & 1ULL)) ++t;
      if (opt_.refresh_per_slot && s > 0) {
        g0 = draw(rng);
        std::fill(drawn_.begin(), drawn_.end(), false);
      }
      double interference = noise_;
      for (std::size_t j = 0; j < interferers_.size(); ++j) {
        const bool active = opt_.activity == ActivityModel::pattern
                                ? ((pattern_[j] >> t) & 1ULL) != 0
                                : uniform01(rng) < interferers_[j].activity;
        if (!active) continue;
        if (!drawn_[j]) {
          fading_[j] = draw(rng);
          drawn_[j] = true;
        }
        interference += interferers_[j].power_gain * fading_[j];
        if (opt_.nearest_only) break;
      }
      const double sinr = interference > 0.0 ? signal_ * g0 / interference
                                             : std::numeric_limits<double>::infinity();
      const double ed = decoding_error_prob(sinr, blocklength_, spec_.packet_bits);
      loss *= ed;
      min_ed = std::min(min_ed, ed);
    }
    if (opt_.criterion == ViolationCriterion::overall)
      violated = eps_q_ + loss > spec_.eps_max;
    else
      violated = min_ed > spec_.eps_max - eps_q_;
    return loss;
  }

  long count_violations(long frames, Rng& rng) {
    if (hopeless()) return frames;
    long v = 0;
    bool violated = false;
    for (long f = 0; f < frames; ++f) {
      frame(rng, violated);
      v += violated ? 1 : 0;
    }
    return v;
  }

 private:
  double draw(Rng& rng) {
    switch (opt_.fading) {
      case FadingKind::nakagami: return gamma_(rng) / spec_.n_tx_antennas;
      case FadingKind::rayleigh: return -std::log1p(-uniform01(rng));
      case FadingKind::deterministic: return 1.0;
    }
    return 1.0;
  }

  const McOptions& opt_;
  const QosSpec& spec_;
  int n_;
  int m_;
  double signal_ = 0.0;
  double noise_ = 0.0;
  double blocklength_ = 0.0;
  double eps_q_ = 0.0;
  std::vector<Interferer> interferers_;
  std::vector<double> fading_;
  std::vector<bool> drawn_;
  std::vector<std::uint64_t> pattern_;
  std::gamma_distribution<double> gamma_;
};

std::vector<int> measured_links(const NetworkInstance& inst) {
  std::vector<int> links;
  for (int k = 0; k < inst.k_links(); ++k)
    if (inst.measured(k)) links.push_back(k);
  return links;
}

void check_inputs(const NetworkInstance& inst, const RepetitionPolicy& policy, const QosSpec& spec,
                  const McOptions& opt) {
  spec.validate();
  opt.validate();
  policy.validate(inst.k_links());
}

}  // namespace

double packet_loss_prob(const NetworkInstance& instance, int k, const RepetitionPolicy& policy,
                        const QosSpec& spec, const McOptions& options, Rng& rng) {
  LinkSim sim(instance, k, policy, spec, options, nullptr);
  bool violated = false;
  return sim.frame(rng, violated);
}

QosEstimate estimate_qos_violation(const NetworkInstance& instance,
                                   const RepetitionPolicy& policy, const QosSpec& spec,
                                   const McOptions& options) {
  check_inputs(instance, policy, spec, options);
  QosEstimate est;
  est.links = measured_links(instance);
  est.seed = options.seed;
  est.trials = long(options.realizations) * options.frames;
  const std::size_t n = est.links.size();
  est.p_k = Eigen::VectorXd::Zero(n);
  const auto mask = interference_mask(instance, options.cutoff_m);
  parallel_for(n, [&](std::size_t j) {
    const int k = est.links[j];
    LinkSim sim(instance, k, policy, spec, options, &mask);
    Rng rng = make_stream(options.seed, "mc-link", k);
    est.p_k(j) = double(sim.count_violations(est.trials, rng)) / est.trials;
  });
  if (n > 0) {
    est.p_vio = est.p_k.mean();
    const double var = (est.p_k.array() * (1.0 - est.p_k.array())).sum() / est.trials;
    est.std_error = std::sqrt(var) / n;
  }
  return est;
}

QosEstimate estimate_over_instances(const InstanceGenerator& generator,
                                    const PolicyMaker& policy_maker, const QosSpec& spec,
                                    const McOptions& options) {
  spec.validate();
  options.validate();
  const int reals = options.realizations;
  std::vector<std::vector<int>> links(reals);
  std::vector<Eigen::VectorXd> pk(reals);
  parallel_for(reals, [&](std::size_t r) {
    Rng inst_rng = make_stream(options.seed, "instance", r);
    const NetworkInstance inst = generator(inst_rng);
    const RepetitionPolicy policy = policy_maker(inst);
    check_inputs(inst, policy, spec, options);
    const std::uint64_t rseed = split_seed(options.seed, "realization", r);
    links[r] = measured_links(inst);
    pk[r] = Eigen::VectorXd::Zero(links[r].size());
    const auto mask = interference_mask(inst, options.cutoff_m);
    for (std::size_t j = 0; j < links[r].size(); ++j) {
      const int k = links[r][j];
      LinkSim sim(inst, k, policy, spec, options, &mask);
      Rng rng = make_stream(rseed, "mc-link", k);
      pk[r](j) = double(sim.count_violations(options.frames, rng)) / options.frames;
    }
  });
  QosEstimate est;
  est.seed = options.seed;
  est.trials = options.frames;
  std::size_t total = 0;
  for (const auto& v : pk) total += v.size();
  est.p_k.resize(total);
  std::size_t pos = 0;
  for (int r = 0; r < reals; ++r) {
    for (std::size_t j = 0; j < links[r].size(); ++j) {
      est.links.push_back(links[r][j]);
      est.p_k(pos++) = pk[r](j);
    }
    est.realization_p_vio.push_back(pk[r].size() ? pk[r].mean() : 0.0);
  }
  if (total > 0) {
    est.p_vio = est.p_k.mean();
    // Cluster-robust error: links of one realization share an instance.
    double acc = 0.0;
    for (int r = 0; r < reals; ++r) {
      const double dev = pk[r].sum() - est.p_vio * pk[r].size();
      acc += dev * dev;
    }
    est.std_error = std::sqrt(acc) / total;
  }
  return est;
}

double probe_loss(const NetworkInstance& instance, const RepetitionPolicy& policy,
                  const QosSpec& spec, const McOptions& options) {
  const QosEstimate est = estimate_qos_violation(instance, policy, spec, options);
  const double links = std::max<std::size_t>(1, est.links.size());
  const double floor = 1.0 / (2.0 * est.trials * links);
  return std::log(std::max(est.p_vio, floor));
}

std::string estimate_to_csv(const QosEstimate& est) {
  std::ostringstream out;
  out.precision(17);
  out << "link,p_k\n";
  for (Eigen::Index j = 0; j < est.p_k.size(); ++j) out << est.links[j] << ',' << est.p_k(j) << '\n';
  out << "#p_vio," << est.p_vio << '\n';
  out << "#std_error," << est.std_error << '\n';
  out << "#trials," << est.trials << '\n';
  out << "#seed," << est.seed << '\n';
  return out.str();
}

std::string estimate_to_json(const QosEstimate& est) {
  nlohmann::json j;
  j["links"] = est.links;
  j["p_k"] = std::vector<double>(est.p_k.data(), est.p_k.data() + est.p_k.size());
  j["p_vio"] = est.p_vio;
  j["std_error"] = est.std_error;
  j["trials"] = est.trials;
  j["seed"] = est.seed;
  if (!est.realization_p_vio.empty()) j["realization_p_vio"] = est.realization_p_vio;
  return j.dump(2);
}

}  // namespace urllc
