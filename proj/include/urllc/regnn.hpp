#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "urllc/mcsim.hpp"

namespace urllc {

enum class Activation { relu, sigmoid, identity };

// One polynomial graph filter: out = psi(sum_i H^i Y A_i), A_i of size F_in x F_out.
struct GraphFilterLayer {
  std::vector<Eigen::MatrixXd> taps;
  Activation activation = Activation::relu;

  int filter_taps() const { return static_cast<int>(taps.size()); }
  int features_in() const { return taps.empty() ? 0 : static_cast<int>(taps[0].rows()); }
  int features_out() const { return taps.empty() ? 0 : static_cast<int>(taps[0].cols()); }
};

struct GraphNetwork {
  std::vector<GraphFilterLayer> layers;
  long parameter_count() const;
};

enum class InitMean {
  zero,      // every tap drawn around zero
  identity,  // tap 0 drawn around the identity feature map
};

struct RegnnHyper {
  int layers = 25;
  int taps = 4;
  int features = 2;
  double beta_min = 1e-3;
  double init_std = 0.1;
  InitMean init_mean = InitMean::identity;
  double arrival_scale = 10.0;  // network 1 sees lambda * arrival_scale
};

struct RegnnParams {
  std::array<GraphNetwork, 2> networks;
  RegnnHyper hyper;

  long parameter_count() const {
    return networks[0].parameter_count() + networks[1].parameter_count();
  }
};

// Coefficients drawn from a Gaussian truncated at two standard deviations.
RegnnParams init_params(const RegnnHyper& hyper, Rng& rng);

Eigen::VectorXd flatten(const RegnnParams& params);
void unflatten(const Eigen::VectorXd& flat, RegnnParams& params);
// Slice of the flat vector that belongs to network j.
std::pair<long, long> network_range(const RegnnParams& params, int j);

template <class Derived>
auto apply_activation(const Eigen::MatrixBase<Derived>& x, Activation a) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  switch (a) {
    case Activation::relu: return Mat(x.cwiseMax(Scalar(0)));
    case Activation::sigmoid: return Mat((Scalar(1) + (-x.array()).exp()).inverse().matrix());
    case Activation::identity: break;
  }
  return Mat(x);
}

// Pre-activation sum_i H^i Y A_i; powers are applied by repeated products.
template <class DerivedH, class DerivedY>
Eigen::Matrix<typename DerivedY::Scalar, Eigen::Dynamic, Eigen::Dynamic> graph_filter_linear(
    const Eigen::MatrixBase<DerivedH>& h, const Eigen::MatrixBase<DerivedY>& y,
    const GraphFilterLayer& layer) {
  using Scalar = typename DerivedY::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (h.rows() != h.cols() || h.cols() != y.rows() || y.cols() != layer.features_in())
    throw std::invalid_argument("graph filter: dimension mismatch");
  Mat power = y;
  Mat out = power * layer.taps[0].template cast<Scalar>();
  for (int i = 1; i < layer.filter_taps(); ++i) {
    power = h * power;
    out.noalias() += power * layer.taps[i].template cast<Scalar>();
  }
  return out;
}

template <class DerivedH, class DerivedY>
Eigen::Matrix<typename DerivedY::Scalar, Eigen::Dynamic, Eigen::Dynamic> graph_filter_forward(
    const Eigen::MatrixBase<DerivedH>& h, const Eigen::MatrixBase<DerivedY>& y,
    const GraphFilterLayer& layer) {
  return apply_activation(graph_filter_linear(h, y, layer), layer.activation);
}

// Same-group gains divided by their largest entry, so the filter sees O(1)
// values and is invariant to a global rescaling of the gains.
Eigen::MatrixXd normalized_gain(const NetworkInstance& instance);

struct PolicyHeads {
  Eigen::VectorXd xi;
  Eigen::VectorXd beta;
};

struct NetworkCache {
  std::vector<Eigen::MatrixXd> inputs;  // per layer
  std::vector<Eigen::MatrixXd> outputs;
};

struct CascadeSample {
  Eigen::MatrixXd h_norm;
  PolicyHeads heads_n;
  Eigen::VectorXd z1;
  PolicyHeads heads_m;
  Eigen::VectorXd z2;
  std::array<NetworkCache, 2> cache;
};

Eigen::MatrixXd network_forward(const Eigen::MatrixXd& h_norm, const Eigen::MatrixXd& input,
                                const GraphNetwork& net, NetworkCache* cache = nullptr);

PolicyHeads heads_from_output(const Eigen::MatrixXd& out, double beta_min);

// Samples z1 and z2 from the truncated Gaussian heads.
CascadeSample cascade_forward(const NetworkInstance& instance, const RegnnParams& params, Rng& rng);

// Deterministic variant: z1 = xi_1 feeds network 2 and z2 = xi_2.
CascadeSample cascade_mean(const NetworkInstance& instance, const RegnnParams& params);

// Forward pass with fixed samples (used by gradient checks).
CascadeSample cascade_with_samples(const NetworkInstance& instance, const RegnnParams& params,
                                   const Eigen::VectorXd& z1, const Eigen::VectorXd& z2);

struct TruncNormGrad {
  double logpdf;
  double d_xi;
  double d_beta;
};

// Gaussian(xi, beta^2) truncated to [0,1].
TruncNormGrad truncnorm_logpdf_grad(double z, double xi, double beta);
double sample_truncnorm(double xi, double beta, Rng& rng);

// log Psi_N(z1) + log Psi_M|N(z2) for a cached sample.
double policy_log_prob(const CascadeSample& sample);

// loss_value * grad log Psi, flattened like `flatten`.  Network 2 treats z1
// as a constant input.
Eigen::VectorXd backward(const CascadeSample& sample, const RegnnParams& params, double loss_value);

RepetitionPolicy round_policy(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                              const Eigen::VectorXi& n_q_max);

// Per-link N^{q,max} from the queueing model.
Eigen::VectorXi queue_slot_limits(const NetworkInstance& instance, const QosSpec& spec);

RepetitionPolicy regnn_policy(const NetworkInstance& instance, const RegnnParams& params,
                              const QosSpec& spec);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int batch = 32;
  double lr_n = 1e-2;
  double lr_m = 1e-2;
  int iterations = 300;
  int probe_frames = 200;
  double probe_cutoff_m = 500.0;
  bool baseline = true;
  double baseline_decay = 0.9;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainState {
  RegnnParams params;
  int iteration = 0;
  double baseline = 0.0;
  bool baseline_ready = false;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::vector<double> loss_trace;
};

using TrainCallback = std::function<void(const TrainState&)>;

// Runs config.iterations iterations starting from state.iteration.
void train(TrainState& state, const TrainConfig& config, const InstanceGenerator& generator,
           const QosSpec& spec, const TrainCallback& on_iteration = {});

// Convenience: fresh initialization from config.seed.
TrainState train(const RegnnHyper& hyper, const TrainConfig& config,
                 const InstanceGenerator& generator, const QosSpec& spec);

std::string checkpoint_to_json(const TrainState& state, std::uint64_t seed);
std::string checkpoint_to_json(const RegnnParams& params);
TrainState checkpoint_from_json(const std::string& text);
void save_checkpoint(const RegnnParams& params, const std::string& path);
RegnnParams load_checkpoint(const std::string& path);

}  // namespace urllc
