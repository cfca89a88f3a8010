#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "lppo/rng.hpp"

namespace lppo::nn {

/// Fully connected network, tanh hidden activations. When output_tanh is
/// set the last layer is squashed too (used for the policy trunk whose
/// output feeds linear heads).
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;  // layer l: rows = out, cols = in
  std::vector<Eigen::VectorXd> biases;
  bool output_tanh = false;

  static Mlp make(const std::vector<int>& sizes, Rng& rng, bool output_tanh = false,
                  double last_layer_scale = 1.0);

  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  int layer_count() const { return static_cast<int>(weights.size()); }

  Eigen::VectorXd flatten() const;
  void set_from_flat(const Eigen::VectorXd& flat);
  int param_count() const;
};

/// Forward cache: input plus post-activation values per layer.
struct MlpCache {
  Eigen::MatrixXd input;                    // N x in
  std::vector<Eigen::MatrixXd> activations; // per layer, N x width
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

/// Batched forward pass; rows are samples. Throws std::invalid_argument
/// on input dimension mismatch.
MlpCache mlp_forward(const Mlp& mlp, const Eigen::MatrixXd& input);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
  Eigen::MatrixXd d_input;

  Eigen::VectorXd flatten() const;
};

/// Exact reverse-mode gradients of the forward map. The cache must come
/// from a forward pass of the same network (checked).
MlpGrads mlp_backward(const Mlp& mlp, const MlpCache& cache, const Eigen::MatrixXd& upstream);

/// Squashed-Gaussian policy: tanh trunk features, linear mean and
/// log-std heads, action = a_min + (a_max-a_min)*(tanh(u)+1)/2 with
/// u ~ Normal(mu(s), sigma(s)).
struct Policy {
  Mlp trunk;  // output_tanh = true
  Eigen::RowVectorXd w_mean;
  double b_mean = 0.0;
  Eigen::RowVectorXd w_logstd;
  double b_logstd = 0.0;
  double action_min = -1.0;
  double action_max = 1.0;
  double logstd_min = -5.0;
  double logstd_max = 1.0;

  static Policy make(int obs_dim, int hidden, double action_min, double action_max,
                     double init_mean_action, double init_logstd, Rng& rng);

  Eigen::VectorXd flatten() const;
  void set_from_flat(const Eigen::VectorXd& flat);
  int param_count() const;

  double width() const { return action_max - action_min; }
  double squash(double u) const;
  double unsquash(double action) const;  // throws std::domain_error at/outside bounds
};

struct PolicyHeads {
  Eigen::VectorXd mu;          // per sample
  Eigen::VectorXd logstd;      // clamped
  Eigen::VectorXd logstd_raw;  // pre-clamp (for gradient gating)
  MlpCache trunk_cache;
};

PolicyHeads policy_forward(const Policy& policy, const Eigen::MatrixXd& obs);

/// Backprop d(objective)/d(mu), d(objective)/d(logstd) to a flat
/// parameter gradient (clamp gates applied to the log-std path).
Eigen::VectorXd policy_backward(const Policy& policy, const PolicyHeads& heads,
                                const Eigen::VectorXd& d_mu, const Eigen::VectorXd& d_logstd);

struct SampleResult {
  double action = 0.0;
  double log_prob = 0.0;
  double pre_squash = 0.0;  // u
};

SampleResult policy_sample(const Policy& policy, const Eigen::VectorXd& obs, Rng& rng);

/// Log density of an action strictly inside the bounds (change of
/// variables through the squash included).
double policy_logprob(const Policy& policy, const Eigen::VectorXd& obs, double action);

/// Log density evaluated at a stored pre-squash u (the training path;
/// avoids the atanh inversion).
double logprob_from_u(double mu, double logstd, double u, double action_width);

/// Base-Gaussian entropy 0.5*log(2*pi*e*sigma^2); diagnostic convention,
/// squash correction excluded.
double policy_entropy(const Policy& policy, const Eigen::VectorXd& obs);

double squash_mean_action(const Policy& policy, const Eigen::VectorXd& obs);

/// log(1 - tanh(u)^2), numerically stable.
double log1m_tanh_sq(double u);

/// Adaptive-moment optimizer over a flat parameter vector.
struct AdamState {
  Eigen::VectorXd m, v;
  long long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState make(int n);
};

/// One Adam update (descent). Non-finite gradients skip the update and
/// return false.
bool adam_step(AdamState& opt, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               double lr);

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_coordinate = -1;
  int probe_count = 0;
};

/// Compare an analytic gradient against central finite differences at
/// randomly probed coordinates. `loss` is evaluated at the current
/// params; `grad` returns the analytic gradient at the current params.
GradCheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                           const Eigen::VectorXd& params, int probes, double h, Rng& rng);

}  // namespace lppo::nn
