#include "lppo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "lppo/textio.hpp"

namespace lppo::train {

void TrainConfig::validate() const {
  auto req = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("train config: " + what);
  };
  req(discount > 0 && discount < 1, "gamma must be in (0,1)");
  req(gae_decay >= 0 && gae_decay <= 1, "xi must be in [0,1]");
  req(clip_ratio > 0 && clip_ratio < 1, "clip must be in (0,1)");
  req(cost_budget > 0, "delta must be > 0");
  req(lambda_lr > 0 && policy_lr > 0 && value_lr > 0, "learning rates must be > 0");
  req(kl_threshold > 0, "kl_threshold must be > 0");
  req(epochs >= 1 && workers >= 1 && horizon >= 2, "epochs/workers/horizon out of range");
  req(sub_episodes >= 1 && sub_episodes <= horizon, "sub_episodes out of range");
  req(policy_iters >= 1 && value_iters >= 1, "gradient iteration counts must be >= 1");
  req(checkpoint_every >= 1, "checkpoint_every must be >= 1");
  req(hidden >= 1, "hidden width must be >= 1");
  req(logstd_max > logstd_min, "log-std clamp range inverted");
  req(fixed_lambda1 >= 0 && fixed_lambda2 >= 0, "fixed lambda must be >= 0");
  const auto budget = gamma_budget_check(discount, horizon);
  if (!budget.pass) {
    char rounded[16];
    std::snprintf(rounded, sizeof(rounded), "%.4f", budget.minimal_gamma);
    throw std::invalid_argument(
        "train config: gamma budget violated for T=" + fmt_int(horizon) +
        "; need gamma >= " + rounded + " (" + fmt_g17(budget.minimal_gamma) + ")");
  }
}

GammaBudgetResult gamma_budget_check(double gamma, int horizon) {
  if (horizon < 2) throw std::invalid_argument("gamma_budget_check: horizon must be >= 2");
  auto ok = [horizon](double g) {
    return std::pow(g, horizon - 1) >= 1.0 - g;
  };
  GammaBudgetResult r;
  r.pass = gamma > 0 && gamma < 1 && ok(gamma);
  double lo = 1e-9, hi = 1.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  r.minimal_gamma = hi;
  return r;
}

double penalized_reward(const env::RewardVector& r, const LagrangeState& lambda) {
  if (lambda.lambda1 < 0 || lambda.lambda2 < 0)
    throw std::invalid_argument("penalized_reward: negative multiplier");
  return r.r0 - lambda.lambda1 * r.c1 - lambda.lambda2 * r.c2;
}

int RolloutBatch::total_steps() const {
  int n = 0;
  for (const auto& e : episodes) n += static_cast<int>(e.steps.size());
  return n;
}

Eigen::MatrixXd RolloutBatch::obs_matrix() const {
  const int n = total_steps();
  if (n == 0) throw std::invalid_argument("rollout batch is empty");
  Eigen::MatrixXd obs(n, episodes.front().steps.front().obs.size());
  int row = 0;
  for (const auto& e : episodes)
    for (const auto& s : e.steps) obs.row(row++) = s.obs.transpose();
  return obs;
}

RolloutBatch collect_rollouts(const nn::Policy& policy, const nn::Mlp& value,
                              const EnvFactory& env_factory,
                              const std::vector<env::Scenario>& scenarios, int workers,
                              uint64_t seed) {
  if (workers < 1) throw std::invalid_argument("collect_rollouts: workers must be >= 1");
  if (scenarios.empty()) throw std::invalid_argument("collect_rollouts: no scenarios");

  const int n_episodes = static_cast<int>(scenarios.size());
  std::vector<std::optional<RolloutEpisode>> slots(n_episodes);
  std::vector<std::string> errors(workers);

  auto run_worker = [&](int w) {
    try {
      for (int idx = w; idx < n_episodes; idx += workers) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(idx)));
        env::Environment environment = env_factory();
        RolloutEpisode ep;
        ep.scenario_seed = scenarios[idx].seed;
        ep.worker_id = w;
        try {
          env::Observation obs = environment.reset(scenarios[idx]);
          bool done = false;
          while (!done) {
            RolloutStep step;
            step.obs = obs.flat();
            auto s = nn::policy_sample(policy, step.obs, rng);
            step.action = s.action;
            step.pre_squash = s.pre_squash;
            step.log_prob_old = s.log_prob;
            auto res = environment.step(s.action);
            step.reward = res.reward;
            done = res.done;
            obs = res.obs;
            ep.steps.push_back(std::move(step));
          }
        } catch (const std::runtime_error&) {
          continue;  // diverged episode: slot stays empty, counted as dropped
        }
        slots[idx] = std::move(ep);
      }
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  };

  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error("collect_rollouts: worker failed: " + err);

  RolloutBatch batch;
  for (auto& slot : slots) {
    if (slot.has_value())
      batch.episodes.push_back(std::move(*slot));
    else
      batch.dropped++;
  }
  if (batch.dropped * 4 > n_episodes)
    throw std::runtime_error("collect_rollouts: more than 25% of episodes diverged (" +
                             fmt_int(batch.dropped) + "/" + fmt_int(n_episodes) + ")");

  // value estimates under the collection-time snapshot
  if (!batch.episodes.empty()) {
    Eigen::MatrixXd obs = batch.obs_matrix();
    const Eigen::MatrixXd v = nn::mlp_forward(value, obs).output();
    int row = 0;
    for (auto& e : batch.episodes)
      for (auto& s : e.steps) s.value = v(row++, 0);
  }
  return batch;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gae_segment(const Eigen::VectorXd& rewards,
                                                        const Eigen::VectorXd& values,
                                                        double terminal_value,
                                                        double discount, double gae_decay) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n) throw std::invalid_argument("gae_segment: size mismatch");
  Eigen::VectorXd adv(n), ret(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double v_next = t + 1 < n ? values(t + 1) : terminal_value;
    const double delta = rewards(t) + discount * v_next - values(t);
    running = delta + discount * gae_decay * running;
    adv(t) = running;
    ret(t) = running + values(t);
  }
  return {adv, ret};
}

GaeResult compute_gae(const RolloutBatch& batch, const nn::Mlp& value,
                      const LagrangeState& lambda, double discount, double gae_decay,
                      int sub_episodes) {
  const int n_total = batch.total_steps();
  Eigen::MatrixXd obs = batch.obs_matrix();
  const Eigen::MatrixXd v_all = nn::mlp_forward(value, obs).output();

  GaeResult out;
  out.advantages.resize(n_total);
  out.returns.resize(n_total);

  int base = 0;
  for (const auto& ep : batch.episodes) {
    const int n = static_cast<int>(ep.steps.size());
    Eigen::VectorXd rewards(n), values(n);
    for (int t = 0; t < n; ++t) {
      rewards(t) = penalized_reward(ep.steps[t].reward, lambda);
      values(t) = v_all(base + t, 0);
    }
    const int n_seg = std::min(std::max(sub_episodes, 1), n);
    const int seg_len = n / n_seg, extra = n % n_seg;
    int a = 0;
    for (int s = 0; s < n_seg; ++s) {
      const int len = seg_len + (s < extra ? 1 : 0);
      const int b = a + len;
      // bootstrap from the value net except at the true episode end
      const double terminal = b == n ? 0.0 : v_all(base + b, 0);
      auto [adv, ret] = gae_segment(rewards.segment(a, len), values.segment(a, len),
                                    terminal, discount, gae_decay);
      out.advantages.segment(base + a, len) = adv;
      out.returns.segment(base + a, len) = ret;
      a = b;
    }
    base += n;
  }

  const double mean = out.advantages.mean();
  const double sd =
      std::sqrt((out.advantages.array() - mean).square().mean());
  out.advantages = (out.advantages.array() - mean) / std::max(sd, 1e-8);
  return out;
}

SurrogateBatch flatten_batch(const RolloutBatch& batch, const Eigen::VectorXd& advantages) {
  SurrogateBatch f;
  f.obs = batch.obs_matrix();
  const int n = batch.total_steps();
  if (advantages.size() != n)
    throw std::invalid_argument("ppo_update: advantages not aligned with batch");
  f.u.resize(n);
  f.logprob_old.resize(n);
  f.adv = advantages;
  int row = 0;
  for (const auto& e : batch.episodes)
    for (const auto& s : e.steps) {
      f.u(row) = s.pre_squash;
      f.logprob_old(row) = s.log_prob_old;
      ++row;
    }
  return f;
}

SurrogateValue ppo_surrogate(const nn::Policy& policy, const SurrogateBatch& f,
                             double clip_ratio) {
  SurrogateValue ev;
  ev.heads = nn::policy_forward(policy, f.obs);
  const Eigen::Index n = f.u.size();
  ev.logprob.resize(n);
  double obj = 0.0, kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ev.logprob(i) =
        nn::logprob_from_u(ev.heads.mu(i), ev.heads.logstd(i), f.u(i), policy.width());
    const double ratio = std::exp(ev.logprob(i) - f.logprob_old(i));
    const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
    obj += std::min(ratio * f.adv(i), clipped * f.adv(i));
    kl += f.logprob_old(i) - ev.logprob(i);
  }
  ev.objective = obj / static_cast<double>(n);
  ev.kl = kl / static_cast<double>(n);
  return ev;
}

Eigen::VectorXd ppo_surrogate_gradient(const nn::Policy& policy, const SurrogateBatch& f,
                                       const SurrogateValue& ev, double clip_ratio) {
  const Eigen::Index n = f.u.size();
  Eigen::VectorXd d_mu(n), d_logstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(ev.logprob(i) - f.logprob_old(i));
    const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
    const double s1 = ratio * f.adv(i);
    const double s2 = clipped * f.adv(i);
    // gradient flows through the unclipped branch when it is selected
    const double d_lp = s1 <= s2 ? ratio * f.adv(i) / static_cast<double>(n) : 0.0;
    const double sigma = std::exp(ev.heads.logstd(i));
    const double z = (f.u(i) - ev.heads.mu(i)) / sigma;
    d_mu(i) = d_lp * z / sigma;
    d_logstd(i) = d_lp * (z * z - 1.0);
  }
  return nn::policy_backward(policy, ev.heads, d_mu, d_logstd);
}

PpoUpdateStats ppo_update(nn::Policy& policy, nn::AdamState& opt, const RolloutBatch& batch,
                          const Eigen::VectorXd& advantages, double clip_ratio,
                          double kl_threshold, int max_iters, double lr) {
  SurrogateBatch f = flatten_batch(batch, advantages);
  const Eigen::VectorXd params_snapshot = policy.flatten();
  const nn::AdamState opt_snapshot = opt;

  PpoUpdateStats stats;
  for (int iter = 0; iter < max_iters; ++iter) {
    SurrogateValue ev = ppo_surrogate(policy, f, clip_ratio);
    if (!std::isfinite(ev.objective)) {
      policy.set_from_flat(params_snapshot);
      opt = opt_snapshot;
      stats.aborted = true;
      return stats;
    }
    if (iter > 0 && ev.kl > kl_threshold) break;  // early stop before this update
    stats.kl_stop = ev.kl;
    stats.objective = ev.objective;

    const Eigen::VectorXd grad = ppo_surrogate_gradient(policy, f, ev, clip_ratio);
    Eigen::VectorXd params = policy.flatten();
    if (!nn::adam_step(opt, params, Eigen::VectorXd(-grad), lr)) {
      policy.set_from_flat(params_snapshot);
      opt = opt_snapshot;
      stats.aborted = true;
      return stats;
    }
    policy.set_from_flat(params);
    stats.iters = iter + 1;
  }
  return stats;
}

ValueUpdateStats value_update(nn::Mlp& value, nn::AdamState& opt,
                              const Eigen::MatrixXd& obs, const Eigen::VectorXd& returns,
                              int iters, double lr) {
  if (obs.rows() != returns.size())
    throw std::invalid_argument("value_update: returns not aligned with batch");
  const Eigen::VectorXd params_snapshot = value.flatten();
  const nn::AdamState opt_snapshot = opt;
  const double inv_n = 1.0 / static_cast<double>(obs.rows());

  auto loss_at = [&]() {
    const Eigen::MatrixXd v = nn::mlp_forward(value, obs).output();
    return (v.col(0) - returns).squaredNorm() * inv_n;
  };

  ValueUpdateStats stats;
  stats.loss_before = loss_at();
  for (int iter = 0; iter < iters; ++iter) {
    nn::MlpCache cache = nn::mlp_forward(value, obs);
    const Eigen::VectorXd err = cache.output().col(0) - returns;
    const double loss = err.squaredNorm() * inv_n;
    if (!std::isfinite(loss)) {
      value.set_from_flat(params_snapshot);
      opt = opt_snapshot;
      stats.aborted = true;
      return stats;
    }
    Eigen::MatrixXd upstream = (2.0 * inv_n) * err;
    const Eigen::VectorXd grad = nn::mlp_backward(value, cache, upstream).flatten();
    Eigen::VectorXd params = value.flatten();
    if (!nn::adam_step(opt, params, grad, lr)) {
      value.set_from_flat(params_snapshot);
      opt = opt_snapshot;
      stats.aborted = true;
      return stats;
    }
    value.set_from_flat(params);
    stats.iters = iter + 1;
  }
  stats.loss_after = loss_at();
  return stats;
}

std::array<double, 2> discounted_costs(const RolloutBatch& batch, double discount) {
  if (batch.episodes.empty()) throw std::invalid_argument("discounted_costs: empty batch");
  double j1 = 0.0, j2 = 0.0;
  for (const auto& ep : batch.episodes) {
    double g = 1.0;
    for (const auto& s : ep.steps) {
      j1 += g * s.reward.c1;
      j2 += g * s.reward.c2;
      g *= discount;
    }
  }
  const double n = static_cast<double>(batch.episodes.size());
  return {j1 / n, j2 / n};
}

LagrangeState lambda_update(const LagrangeState& lambda, const RolloutBatch& batch,
                            double cost_budget, double discount, double lambda_lr) {
  if (lambda.lambda1 < 0 || lambda.lambda2 < 0)
    throw std::invalid_argument("lambda_update: negative multiplier");
  const auto j = discounted_costs(batch, discount);
  const double budget = cost_budget * (1.0 - discount);

  LagrangeState next = lambda;
  // dO/dlambda_k = clip(budget - J_k, -inf, 0); descent increases lambda
  // only while the constraint is violated
  const double g1 = std::min(budget - j[0], 0.0);
  const double g2 = std::min(budget - j[1], 0.0);
  next.lambda1 = lambda.lambda1 - lambda_lr * g1;
  next.lambda2 = lambda.lambda2 - lambda_lr * g2;
  next.history.push_back({next.lambda1, next.lambda2});
  return next;
}

const char* const kStatsHeader =
    "epoch,mean_return,J1,J2,lambda1,lambda2,entropy,kl_stop,policy_iters,value_iters,wall_s";

TrainerState init_trainer(const TrainConfig& config, int obs_dim, double action_min,
                          double action_max) {
  TrainerState st;
  st.epoch = 0;
  st.rng = Rng(mix_seed(config.seed, 0xa11c));
  st.policy = nn::Policy::make(obs_dim, config.hidden, action_min, action_max,
                               std::clamp(config.init_mean_action, action_min + 1e-6,
                                          action_max - 1e-6),
                               config.init_logstd, st.rng);
  st.policy.logstd_min = config.logstd_min;
  st.policy.logstd_max = config.logstd_max;
  st.value = nn::Mlp::make({obs_dim, config.hidden, config.hidden, 1}, st.rng,
                           /*output_tanh=*/false, /*last_layer_scale=*/0.01);
  st.policy_opt = nn::AdamState::make(st.policy.param_count());
  st.value_opt = nn::AdamState::make(st.value.param_count());
  if (config.fixed_lambda) {
    st.lambda.lambda1 = config.fixed_lambda1;
    st.lambda.lambda2 = config.fixed_lambda2;
  }
  return st;
}

std::vector<EpochStats> train(const TrainSetup& setup, TrainerState& state) {
  const TrainConfig& cfg = setup.config;
  cfg.validate();
  if (setup.train_scenarios == nullptr || setup.train_scenarios->empty())
    throw std::invalid_argument("train: scenario set is empty");
  const auto& all = *setup.train_scenarios;

  std::vector<EpochStats> stats_out;
  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<env::Scenario> slice;
    slice.reserve(cfg.workers);
    for (int w = 0; w < cfg.workers; ++w)
      slice.push_back(all[(static_cast<size_t>(epoch) * cfg.workers + w) % all.size()]);

    RolloutBatch batch =
        collect_rollouts(state.policy, state.value, setup.env_factory, slice, cfg.workers,
                         mix_seed(cfg.seed, 0xc0111ec7, static_cast<uint64_t>(epoch)));

    const auto j = discounted_costs(batch, cfg.discount);
    double mean_return = 0.0;
    for (const auto& ep : batch.episodes) {
      double sum = 0.0;
      for (const auto& s : ep.steps) sum += s.reward.r0;
      mean_return += sum;
    }
    mean_return /= static_cast<double>(batch.episodes.size());

    const auto heads = nn::policy_forward(state.policy, batch.obs_matrix());
    const double entropy =
        0.5 * (1.8378770664093454835606594728112 + 1.0) + heads.logstd.mean();

    GaeResult gae = compute_gae(batch, state.value, state.lambda, cfg.discount,
                                cfg.gae_decay, cfg.sub_episodes);
    const auto ppo = ppo_update(state.policy, state.policy_opt, batch, gae.advantages,
                                cfg.clip_ratio, cfg.kl_threshold, cfg.policy_iters,
                                cfg.policy_lr);
    const auto val = value_update(state.value, state.value_opt, batch.obs_matrix(),
                                  gae.returns, cfg.value_iters, cfg.value_lr);
    if (!cfg.fixed_lambda)
      state.lambda =
          lambda_update(state.lambda, batch, cfg.cost_budget, cfg.discount, cfg.lambda_lr);

    EpochStats row;
    row.epoch = epoch;
    row.mean_return = mean_return;
    row.j1 = j[0];
    row.j2 = j[1];
    row.lambda1 = state.lambda.lambda1;
    row.lambda2 = state.lambda.lambda2;
    row.entropy = entropy;
    row.kl_stop = ppo.kl_stop;
    row.policy_iters = ppo.iters;
    row.value_iters = val.iters;
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stats_out.push_back(row);
    if (setup.on_epoch) setup.on_epoch(row);

    state.epoch = epoch + 1;
    const bool last = epoch + 1 == cfg.epochs;
    if (setup.on_checkpoint && ((epoch + 1) % cfg.checkpoint_every == 0 || last))
      setup.on_checkpoint(state);
  }
  return stats_out;
}

TransferResult transfer_rollout(const nn::Policy& policy, env::Environment& environment,
                                const env::Scenario& scenario, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("transfer_rollout: eta must be > 0");

  TransferResult out;
  out.trace.scenario_seed = scenario.seed;
  env::Observation obs = environment.reset(scenario);
  double prev = scenario.demand[0];
  bool done = false;
  int t = 0;
  while (!done) {
    const double requested = nn::squash_mean_action(policy, obs.flat());
    const double applied =
        std::isinf(eta) ? requested : prev + std::clamp(requested - prev, -eta, eta);
    try {
      auto res = environment.step(applied);
      const Eigen::VectorXd raw = environment.raw_state();
      const int tb = std::min(t + 1, scenario.horizon - 1);
      out.trace.push(applied, scenario.demand[t], scenario.c_in_min[tb],
                     scenario.c_out_max[tb], raw(kIdxTHxSIn), raw(kIdxTHxSOut), res.reward);
      obs = res.obs;
      done = res.done;
    } catch (const std::runtime_error& e) {
      out.diagnostic = e.what();
      break;
    }
    prev = applied;
    ++t;
  }
  return out;
}

}  // namespace lppo::train
