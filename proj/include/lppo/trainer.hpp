#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lppo/environment.hpp"
#include "lppo/nn.hpp"
#include "lppo/scenario.hpp"

namespace lppo::train {

struct TrainConfig {
  double discount = 0.99;      // gamma
  double gae_decay = 0.95;     // xi
  double clip_ratio = 0.2;     // epsilon
  double kl_threshold = 0.015;
  double cost_budget = 0.05;   // delta, per constraint
  double lambda_lr = 5e-3;
  double policy_lr = 1e-4;
  double value_lr = 3e-4;
  int epochs = 150;
  int workers = 8;
  int horizon = 300;           // T, ROM steps
  int sub_episodes = 1;
  int policy_iters = 80;
  int value_iters = 80;
  bool fixed_lambda = false;   // disables multiplier learning
  double fixed_lambda1 = 0.0;
  double fixed_lambda2 = 0.0;
  uint64_t seed = 12345;
  int checkpoint_every = 25;
  int hidden = 64;
  double init_logstd = -0.5;
  double init_mean_action = 1.0;
  double logstd_min = -2.5;  // sigma floor keeps the density curvature bounded
  double logstd_max = 1.0;

  void validate() const;  // throws std::invalid_argument (includes the gamma budget)
};

struct GammaBudgetResult {
  bool pass = false;
  double minimal_gamma = 1.0;  // smallest gamma satisfying the budget for this horizon
};

/// Budget condition gamma^(T-1) >= 1 - gamma; the minimal feasible gamma
/// is found by bisection to 1e-6.
GammaBudgetResult gamma_budget_check(double gamma, int horizon);

/// Non-negative multipliers, monotonically non-decreasing over training,
/// initialized to zero.
struct LagrangeState {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<std::array<double, 2>> history;
};

/// R_hat = r0 - lambda1*c1 - lambda2*c2 (the constant budget term drops
/// out of the fast-timescale objective).
double penalized_reward(const env::RewardVector& r, const LagrangeState& lambda);

struct RolloutStep {
  Eigen::VectorXd obs;
  double action = 0.0;
  double pre_squash = 0.0;
  double log_prob_old = 0.0;
  double value = 0.0;
  env::RewardVector reward;
};

struct RolloutEpisode {
  uint64_t scenario_seed = 0;
  int worker_id = 0;
  std::vector<RolloutStep> steps;
};

struct RolloutBatch {
  std::vector<RolloutEpisode> episodes;
  int dropped = 0;

  int total_steps() const;
  Eigen::MatrixXd obs_matrix() const;  // flattened episode-major
};

using EnvFactory = std::function<env::Environment()>;

/// Roll one episode per scenario under the snapshot policy. Episodes are
/// distributed across `workers` threads and merged in scenario order, so
/// the result is independent of the thread count. Per-episode RNG streams
/// are derived from (seed, episode index). Diverged episodes are dropped;
/// the epoch fails if more than 25% drop.
RolloutBatch collect_rollouts(const nn::Policy& policy, const nn::Mlp& value,
                              const EnvFactory& env_factory,
                              const std::vector<env::Scenario>& scenarios, int workers,
                              uint64_t seed);

/// Streaming GAE over one segment: rewards/values aligned, terminal_value
/// bootstraps the segment end. Returns (advantages, returns).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gae_segment(const Eigen::VectorXd& rewards,
                                                        const Eigen::VectorXd& values,
                                                        double terminal_value,
                                                        double discount, double gae_decay);

struct GaeResult {
  Eigen::VectorXd advantages;  // normalized (zero mean, unit variance)
  Eigen::VectorXd returns;     // advantages_raw + V(s_t)
};

/// Penalized rewards -> per-sub-episode GAE with bootstrapped segment
/// ends (zero only at the true episode end), then epoch-level advantage
/// normalization.
GaeResult compute_gae(const RolloutBatch& batch, const nn::Mlp& value,
                      const LagrangeState& lambda, double discount, double gae_decay,
                      int sub_episodes);

/// Flattened per-step tensors used by the policy objective.
struct SurrogateBatch {
  Eigen::MatrixXd obs;
  Eigen::VectorXd u;            // stored pre-squash samples
  Eigen::VectorXd logprob_old;  // under the sampling snapshot
  Eigen::VectorXd adv;
};

SurrogateBatch flatten_batch(const RolloutBatch& batch, const Eigen::VectorXd& advantages);

struct SurrogateValue {
  double objective = 0.0;  // clipped-surrogate mean
  double kl = 0.0;         // mean(logprob_old - logprob)
  Eigen::VectorXd logprob;
  nn::PolicyHeads heads;
};

/// PPO-clip objective E[min(ratio*A, clip(ratio, 1-eps, 1+eps)*A)] with
/// ratio = exp(logprob - logprob_old).
SurrogateValue ppo_surrogate(const nn::Policy& policy, const SurrogateBatch& batch,
                             double clip_ratio);

/// Exact gradient of the surrogate w.r.t. flattened policy parameters.
Eigen::VectorXd ppo_surrogate_gradient(const nn::Policy& policy, const SurrogateBatch& batch,
                                       const SurrogateValue& value, double clip_ratio);

struct PpoUpdateStats {
  int iters = 0;
  double kl_stop = 0.0;
  double objective = 0.0;
  bool aborted = false;
};

/// Ascent on the clipped surrogate with KL early stopping. kl_stop is the
/// last KL estimate that passed the gate (<= threshold by construction).
/// A non-finite objective aborts the update and restores the snapshot.
PpoUpdateStats ppo_update(nn::Policy& policy, nn::AdamState& opt, const RolloutBatch& batch,
                          const Eigen::VectorXd& advantages, double clip_ratio,
                          double kl_threshold, int max_iters, double lr);

struct ValueUpdateStats {
  int iters = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  bool aborted = false;
};

ValueUpdateStats value_update(nn::Mlp& value, nn::AdamState& opt,
                              const Eigen::MatrixXd& obs, const Eigen::VectorXd& returns,
                              int iters, double lr);

/// Mean discounted cost per constraint over the batch episodes.
std::array<double, 2> discounted_costs(const RolloutBatch& batch, double discount);

/// Slow-timescale multiplier step: lambda_k increases by
/// lambda_lr * (J_k - delta*(1-gamma)) when constraint k is violated,
/// otherwise stays put (clipped gradient).
LagrangeState lambda_update(const LagrangeState& lambda, const RolloutBatch& batch,
                            double cost_budget, double discount, double lambda_lr);

struct EpochStats {
  int epoch = 0;
  double mean_return = 0.0;  // mean episode sum of r0
  double j1 = 0.0, j2 = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double entropy = 0.0;
  double kl_stop = 0.0;
  int policy_iters = 0;
  int value_iters = 0;
  double wall_s = 0.0;
};

extern const char* const kStatsHeader;

/// Mutable training state; checkpointable.
struct TrainerState {
  int epoch = 0;  // next epoch to run
  nn::Policy policy;
  nn::Mlp value;
  nn::AdamState policy_opt;
  nn::AdamState value_opt;
  LagrangeState lambda;
  Rng rng;
};

TrainerState init_trainer(const TrainConfig& config, int obs_dim, double action_min,
                          double action_max);

struct TrainSetup {
  TrainConfig config;
  env::EnvParams env_params;
  EnvFactory env_factory;
  const std::vector<env::Scenario>* train_scenarios = nullptr;
  /// Called after each epoch with the stats row; called with
  /// (epoch, state) whenever a checkpoint should be emitted.
  std::function<void(const EpochStats&)> on_epoch;
  std::function<void(const TrainerState&)> on_checkpoint;
};

/// Two-timescale training loop: collect -> GAE -> policy/value updates
/// (fast) -> one lambda update (slow). Deterministic given the seed.
std::vector<EpochStats> train(const TrainSetup& setup, TrainerState& state);

struct TransferResult {
  env::EpisodeTrace trace;
  std::string diagnostic;  // non-empty if the episode was truncated
};

/// Deterministic (mean-action) rollout with rate clipping: applied action
/// moves from the previous applied action by at most eta per step. eta may
/// be +infinity (clipping disabled). The first step anchors at demand_0.
TransferResult transfer_rollout(const nn::Policy& policy, env::Environment& environment,
                                const env::Scenario& scenario, double eta);

}  // namespace lppo::train
