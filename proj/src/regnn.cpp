#include "urllc/regnn.hpp"

#include <cmath>
#include <numbers>

#include "urllc/queueing.hpp"

namespace urllc {

long GraphNetwork::parameter_count() const {
  long n = 0;
  for (const auto& l : layers)
    for (const auto& t : l.taps) n += t.size();
  return n;
}

RegnnParams init_params(const RegnnHyper& h, Rng& rng) {
  if (h.layers < 1 || h.taps < 1 || h.features < 2)
    throw ConfigError("regnn: need layers >= 1, taps >= 1 and features >= 2");
  if (!(h.beta_min > 0.0 && h.beta_min < 1.0)) throw ConfigError("regnn.beta_min must lie in (0,1)");
  if (!(h.init_std >= 0.0)) throw ConfigError("regnn.init_std must be non-negative");
  RegnnParams p;
  p.hyper = h;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noise = [&] {
    double x = 0.0;
    do x = normal(rng);
    while (std::abs(x) > 2.0);
    return h.init_std * x;
  };
  for (auto& net : p.networks) {
    net.layers.resize(h.layers);
    for (int l = 0; l < h.layers; ++l) {
      auto& layer = net.layers[l];
      const int fin = l == 0 ? 1 : h.features;
      // The last layer emits the two heads; with features = 2 this keeps the
      // parameter count uniform across hidden and output layers.
      const int fout = l == h.layers - 1 ? 2 : h.features;
      layer.activation = l == h.layers - 1 ? Activation::sigmoid : Activation::relu;
      layer.taps.assign(h.taps, Eigen::MatrixXd::Zero(fin, fout));
      for (int i = 0; i < h.taps; ++i)
        for (int g = 0; g < fout; ++g)
          for (int f = 0; f < fin; ++f) {
            double mean = 0.0;
            if (h.init_mean == InitMean::identity && i == 0 && (fin == 1 || f == g)) mean = 1.0;
            layer.taps[i](f, g) = mean + noise();
          }
    }
  }
  return p;
}

Eigen::VectorXd flatten(const RegnnParams& p) {
  Eigen::VectorXd v(p.parameter_count());
  long pos = 0;
  for (const auto& net : p.networks)
    for (const auto& l : net.layers)
      for (const auto& t : l.taps) {
        v.segment(pos, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
        pos += t.size();
      }
  return v;
}

void unflatten(const Eigen::VectorXd& v, RegnnParams& p) {
  if (v.size() != p.parameter_count()) throw std::invalid_argument("unflatten: size mismatch");
  long pos = 0;
  for (auto& net : p.networks)
    for (auto& l : net.layers)
      for (auto& t : l.taps) {
        Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = v.segment(pos, t.size());
        pos += t.size();
      }
}

std::pair<long, long> network_range(const RegnnParams& p, int j) {
  const long n0 = p.networks[0].parameter_count();
  return j == 0 ? std::pair{0L, n0} : std::pair{n0, p.networks[1].parameter_count()};
}

Eigen::MatrixXd normalized_gain(const NetworkInstance& inst) {
  const int k = inst.k_links();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (inst.reuse_group(i) == inst.reuse_group(j)) h(i, j) = inst.gain(i, j);
  const double top = k ? h.maxCoeff() : 0.0;
  if (top > 0.0) h /= top;
  return h;
}

Eigen::MatrixXd network_forward(const Eigen::MatrixXd& h, const Eigen::MatrixXd& input,
                                const GraphNetwork& net, NetworkCache* cache) {
  Eigen::MatrixXd y = input;
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  for (const auto& layer : net.layers) {
    if (cache) cache->inputs.push_back(y);
    y = graph_filter_forward(h, y, layer);
    if (cache) cache->outputs.push_back(y);
  }
  return y;
}

PolicyHeads heads_from_output(const Eigen::MatrixXd& out, double beta_min) {
  PolicyHeads heads;
  heads.xi = out.col(0);
  heads.beta = (beta_min + (1.0 - beta_min) * out.col(1).array()).matrix();
  return heads;
}

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Phi(b) - Phi(a) for a < b, evaluated on the side with less cancellation.
double normal_mass(double a, double b) {
  if (a >= 0.0) return q_function(a) - q_function(b);
  if (b <= 0.0) return q_function(-b) - q_function(-a);
  return 1.0 - q_function(b) - q_function(-a);
}

Eigen::MatrixXd arrival_input(const NetworkInstance& inst, const RegnnHyper& h) {
  return inst.arrival * h.arrival_scale;
}

void check_shape(const RegnnParams& p) {
  for (int j = 0; j < 2; ++j) {
    const auto& layers = p.networks[j].layers;
    if (layers.empty()) throw ConfigError("regnn: network has no layers");
    if (layers.front().features_in() != 1 || layers.back().features_out() != 2)
      throw ConfigError("regnn: networks must map 1 input feature to 2 head features");
  }
}

}  // namespace

TruncNormGrad truncnorm_logpdf_grad(double z, double xi, double beta) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::domain_error("truncnorm: z outside [0,1]");
  if (!(beta > 0.0)) throw std::domain_error("truncnorm: beta must be positive");
  const double s = (z - xi) / beta;
  const double a = -xi / beta;
  const double b = (1.0 - xi) / beta;
  const double mass = normal_mass(a, b);
  const double pa = phi(a);
  const double pb = phi(b);
  TruncNormGrad g;
  g.logpdf = -0.5 * s * s - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(beta) - std::log(mass);
  g.d_xi = s / beta + (pb - pa) / (beta * mass);
  const double bpb = std::isfinite(b) ? b * pb : 0.0;
  const double apa = std::isfinite(a) ? a * pa : 0.0;
  g.d_beta = (s * s - 1.0) / beta + (bpb - apa) / (beta * mass);
  return g;
}

double sample_truncnorm(double xi, double beta, Rng& rng) {
  const double a = -xi / beta;
  const double b = (1.0 - xi) / beta;
  const double u = uniform01(rng);
  double x = 0.0;
  if (a >= 0.0) {
    // Both ends in the upper tail: interpolate in Q.
    const double qa = q_function(a);
    const double qb = q_function(b);
    const double p = qa - u * (qa - qb);
    x = p > 0.0 && p < 1.0 ? inverse_q(p) : a;
  } else if (b <= 0.0) {
    const double pa = q_function(-a);
    const double pb = q_function(-b);
    const double p = pa + u * (pb - pa);
    x = p > 0.0 && p < 1.0 ? -inverse_q(p) : b;
  } else {
    const double pa = q_function(-a);  // Phi(a)
    const double p = pa + u * normal_mass(a, b);
    x = p > 0.0 && p < 1.0 ? -inverse_q(p) : (p <= 0.0 ? a : b);
  }
  return std::clamp(xi + beta * x, 0.0, 1.0);
}

namespace {

CascadeSample run_cascade(const NetworkInstance& inst, const RegnnParams& params,
                          const Eigen::VectorXd* z1_fixed, const Eigen::VectorXd* z2_fixed,
                          Rng* rng, bool use_mean) {
  check_shape(params);
  CascadeSample s;
  s.h_norm = normalized_gain(inst);
  const double bmin = params.hyper.beta_min;
  const Eigen::MatrixXd out1 =
      network_forward(s.h_norm, arrival_input(inst, params.hyper), params.networks[0], &s.cache[0]);
  s.heads_n = heads_from_output(out1, bmin);
  const int k = inst.k_links();
  s.z1.resize(k);
  for (int i = 0; i < k; ++i)
    s.z1(i) = z1_fixed ? (*z1_fixed)(i)
              : use_mean ? s.heads_n.xi(i)
                         : sample_truncnorm(s.heads_n.xi(i), s.heads_n.beta(i), *rng);
  const Eigen::MatrixXd out2 = network_forward(s.h_norm, s.z1, params.networks[1], &s.cache[1]);
  s.heads_m = heads_from_output(out2, bmin);
  s.z2.resize(k);
  for (int i = 0; i < k; ++i)
    s.z2(i) = z2_fixed ? (*z2_fixed)(i)
              : use_mean ? s.heads_m.xi(i)
                         : sample_truncnorm(s.heads_m.xi(i), s.heads_m.beta(i), *rng);
  return s;
}

// Reverse pass through one network given d(objective)/d(output).
void network_backward(const Eigen::MatrixXd& h, const GraphNetwork& net, const NetworkCache& cache,
                      Eigen::MatrixXd d_out, Eigen::VectorXd& grad, long offset) {
  // Offsets of each layer inside this network's flat slice.
  std::vector<long> layer_offset(net.layers.size());
  long pos = offset;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    layer_offset[l] = pos;
    for (const auto& t : net.layers[l].taps) pos += t.size();
  }
  const Eigen::MatrixXd ht = h.transpose();
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = net.layers[l];
    const Eigen::MatrixXd& out = cache.outputs[l];
    Eigen::MatrixXd d_pre;
    switch (layer.activation) {
      case Activation::relu: d_pre = (out.array() > 0.0).cast<double>() * d_out.array(); break;
      case Activation::sigmoid: d_pre = (out.array() * (1.0 - out.array()) * d_out.array()).matrix(); break;
      case Activation::identity: d_pre = d_out; break;
    }
    Eigen::MatrixXd power = cache.inputs[l];
    long tpos = layer_offset[l];
    for (int i = 0; i < layer.filter_taps(); ++i) {
      if (i > 0) power = h * power;
      const Eigen::MatrixXd g = power.transpose() * d_pre;
      grad.segment(tpos, g.size()) += Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
      tpos += g.size();
    }
    if (l == 0) break;
    // d_in = sum_i (H^T)^i d_pre A_i^T, by Horner's scheme.
    const int taps = layer.filter_taps();
    Eigen::MatrixXd acc = d_pre * layer.taps[taps - 1].transpose();
    for (int i = taps - 2; i >= 0; --i) acc = ht * acc + d_pre * layer.taps[i].transpose();
    d_out = std::move(acc);
  }
}

Eigen::MatrixXd head_gradient(const PolicyHeads& heads, const Eigen::VectorXd& z, double beta_min) {
  Eigen::MatrixXd d(z.size(), 2);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const TruncNormGrad g = truncnorm_logpdf_grad(z(k), heads.xi(k), heads.beta(k));
    d(k, 0) = g.d_xi;
    d(k, 1) = g.d_beta * (1.0 - beta_min);
  }
  return d;
}

}  // namespace

CascadeSample cascade_forward(const NetworkInstance& inst, const RegnnParams& params, Rng& rng) {
  return run_cascade(inst, params, nullptr, nullptr, &rng, false);
}

CascadeSample cascade_mean(const NetworkInstance& inst, const RegnnParams& params) {
  return run_cascade(inst, params, nullptr, nullptr, nullptr, true);
}

CascadeSample cascade_with_samples(const NetworkInstance& inst, const RegnnParams& params,
                                   const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) {
  if (z1.size() != inst.k_links() || z2.size() != inst.k_links())
    throw std::invalid_argument("cascade: sample length mismatch");
  return run_cascade(inst, params, &z1, &z2, nullptr, false);
}

double policy_log_prob(const CascadeSample& s) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < s.z1.size(); ++k) {
    total += truncnorm_logpdf_grad(s.z1(k), s.heads_n.xi(k), s.heads_n.beta(k)).logpdf;
    total += truncnorm_logpdf_grad(s.z2(k), s.heads_m.xi(k), s.heads_m.beta(k)).logpdf;
  }
  return total;
}

Eigen::VectorXd backward(const CascadeSample& s, const RegnnParams& params, double loss_value) {
  if (s.cache[0].outputs.size() != params.networks[0].layers.size() ||
      s.cache[1].outputs.size() != params.networks[1].layers.size())
    throw std::logic_error("backward: forward cache missing or stale");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.parameter_count());
  const double bmin = params.hyper.beta_min;
  network_backward(s.h_norm, params.networks[0], s.cache[0], head_gradient(s.heads_n, s.z1, bmin),
                   grad, network_range(params, 0).first);
  network_backward(s.h_norm, params.networks[1], s.cache[1], head_gradient(s.heads_m, s.z2, bmin),
                   grad, network_range(params, 1).first);
  return loss_value * grad;
}

RepetitionPolicy round_policy(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                              const Eigen::VectorXi& n_q_max) {
  const Eigen::Index k = z1.size();
  if (z2.size() != k || n_q_max.size() != k) throw std::invalid_argument("round_policy: length mismatch");
  RepetitionPolicy p{Eigen::VectorXi(k), Eigen::VectorXi(k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    const int cap = std::max(1, n_q_max(i));
    const double zn = std::clamp(z1(i), 0.0, 1.0) * cap;
    // A tiny slack keeps exact products such as 0.2 * 15 from rounding up.
    const int n = std::clamp(static_cast<int>(std::ceil(zn - 1e-9)), 1, cap);
    const int m = std::clamp(static_cast<int>(std::lround(std::clamp(z2(i), 0.0, 1.0) * n)), 1, n);
    p.n_slots(i) = n;
    p.m_reps(i) = m;
  }
  return p;
}

Eigen::VectorXi queue_slot_limits(const NetworkInstance& inst, const QosSpec& spec) {
  Eigen::VectorXi out(inst.k_links());
  for (int k = 0; k < inst.k_links(); ++k) out(k) = std::min(64, max_slots(inst.arrival(k), spec));
  return out;
}

RepetitionPolicy regnn_policy(const NetworkInstance& inst, const RegnnParams& params,
                              const QosSpec& spec) {
  const CascadeSample s = cascade_mean(inst, params);
  return round_policy(s.z1, s.z2, queue_slot_limits(inst, spec));
}

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(lr_n >= 0.0 && lr_m >= 0.0)) throw ConfigError("train learning rates must be non-negative");
  if (iterations < 0) throw ConfigError("train.iterations must be >= 0");
  if (probe_frames < 1) throw ConfigError("train.probe_frames must be >= 1");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw ConfigError("train.baseline_decay must lie in [0,1)");
}

void train(TrainState& state, const TrainConfig& cfg, const InstanceGenerator& generator,
           const QosSpec& spec, const TrainCallback& on_iteration) {
  cfg.validate();
  spec.validate();
  RegnnParams& params = state.params;
  const long n_params = params.parameter_count();
  Eigen::VectorXd lr(n_params);
  const auto r0 = network_range(params, 0);
  const auto r1 = network_range(params, 1);
  lr.segment(r0.first, r0.second).setConstant(cfg.lr_n);
  lr.segment(r1.first, r1.second).setConstant(cfg.lr_m);
  if (cfg.optimizer == Optimizer::adam && state.adam_m.size() != n_params) {
    state.adam_m = Eigen::VectorXd::Zero(n_params);
    state.adam_v = Eigen::VectorXd::Zero(n_params);
  }

  const int b = cfg.batch;
  for (int step = 0; step < cfg.iterations; ++step) {
    const int it = state.iteration;
    std::vector<double> losses(b);
    std::vector<Eigen::VectorXd> scores(b);
    parallel_for(b, [&](std::size_t j) {
      const std::uint64_t idx = std::uint64_t(it) * b + j;
      Rng inst_rng = make_stream(cfg.seed, "train-instance", idx);
      const NetworkInstance inst = generator(inst_rng);
      Rng pol_rng = make_stream(cfg.seed, "train-policy", idx);
      const CascadeSample s = cascade_forward(inst, params, pol_rng);
      const RepetitionPolicy policy = round_policy(s.z1, s.z2, queue_slot_limits(inst, spec));
      McOptions mc;
      mc.realizations = 1;
      mc.frames = cfg.probe_frames;
      mc.cutoff_m = cfg.probe_cutoff_m;
      mc.seed = split_seed(cfg.seed, "train-probe", idx);
      losses[j] = probe_loss(inst, policy, spec, mc);
      scores[j] = backward(s, params, 1.0);
    });
    double mean_loss = 0.0;
    for (double l : losses) mean_loss += l;
    mean_loss /= b;
    if (!std::isfinite(mean_loss)) throw std::runtime_error("train: non-finite loss");
    if (cfg.baseline && !state.baseline_ready) {
      state.baseline = mean_loss;
      state.baseline_ready = true;
    }
    const double ref = cfg.baseline ? state.baseline : 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
    for (int j = 0; j < b; ++j) grad += (losses[j] - ref) * scores[j];
    grad /= b;
    if (!grad.allFinite()) throw std::runtime_error("train: non-finite gradient");

    // Descent on the minimized log-violation objective.
    Eigen::VectorXd theta = flatten(params);
    if (cfg.optimizer == Optimizer::sgd) {
      theta -= lr.cwiseProduct(grad);
    } else {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      state.adam_m = b1 * state.adam_m + (1.0 - b1) * grad;
      state.adam_v = b2 * state.adam_v + (1.0 - b2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, it + 1);
      const double c2 = 1.0 - std::pow(b2, it + 1);
      theta -= (lr.array() * (state.adam_m.array() / c1) /
                ((state.adam_v.array() / c2).sqrt() + eps)).matrix();
    }
    unflatten(theta, params);
    if (cfg.baseline)
      state.baseline = cfg.baseline_decay * state.baseline + (1.0 - cfg.baseline_decay) * mean_loss;
    state.loss_trace.push_back(mean_loss);
    ++state.iteration;
    if (on_iteration) on_iteration(state);
  }
}

TrainState train(const RegnnHyper& hyper, const TrainConfig& config,
                 const InstanceGenerator& generator, const QosSpec& spec) {
  TrainState state;
  Rng rng = make_stream(config.seed, "regnn-init");
  state.params = init_params(hyper, rng);
  train(state, config, generator, spec);
  return state;
}

}  // namespace urllc
