#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lppo/environment.hpp"
#include "lppo/nn.hpp"
#include "lppo/rng.hpp"
#include "lppo/scenario.hpp"

namespace lppo::metrics {

struct MetricsReport {
  double reward_cost_score = 0.0;  // r_bar
  double violation_distance = 0.0; // d
  double violation_rate = 0.0;     // omega
  double joint_safety = 0.0;       // p_hat
  int scenario_count = 0;

  struct PerScenario {
    uint64_t seed = 0;
    double sum_r0 = 0.0;
    double sum_c1 = 0.0;
    double sum_c2 = 0.0;
    double d_in = 0.0;
    double d_out = 0.0;
    int viol_steps = 0;
    int tau = 0;
    bool safe = false;
  };
  std::vector<PerScenario> per_scenario;
};

/// Mean over episodes of sum_t [r0 - (c1 + c2)] (undiscounted).
double reward_cost_score(const std::vector<env::EpisodeTrace>& episodes);

/// Mean over 2N of the per-episode time-averaged violation magnitudes
/// (inlet and outlet summed separately).
double violation_distance(const std::vector<env::EpisodeTrace>& episodes);

/// Mean over episodes of the fraction of steps with any constraint
/// violated.
double violation_rate(const std::vector<env::EpisodeTrace>& episodes);

/// Monte-Carlo joint-safety estimate: fraction of episodes with no
/// violation at any step.
double joint_safety_estimate(const std::vector<env::EpisodeTrace>& episodes);

MetricsReport compute_metrics(const std::vector<env::EpisodeTrace>& episodes);

/// Roll the policy over each scenario (mean action when deterministic,
/// sampled otherwise) and compute all metrics. env_factory provides a
/// fresh environment per episode.
MetricsReport evaluate_policy(const nn::Policy& policy,
                              const std::vector<env::Scenario>& scenarios,
                              const std::function<env::Environment()>& env_factory,
                              bool deterministic, uint64_t seed,
                              std::vector<env::EpisodeTrace>* traces_out = nullptr);

/// Per-scenario CSV with a summary footer row.
void save_report_csv(const std::string& path, const MetricsReport& report);

}  // namespace lppo::metrics
