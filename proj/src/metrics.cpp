#include "lppo/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "lppo/textio.hpp"

namespace lppo::metrics {

namespace {
void require_episodes(const std::vector<env::EpisodeTrace>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("metrics: need at least one episode");
  for (const auto& e : episodes)
    if (e.length() == 0) throw std::invalid_argument("metrics: empty episode");
}

/// Episode-order-independent mean: summation in sorted order makes the
/// metrics bit-exact under permutation of the episode set.
double sorted_mean(std::vector<double> contributions) {
  std::sort(contributions.begin(), contributions.end());
  double sum = 0.0;
  for (double c : contributions) sum += c;
  return sum / static_cast<double>(contributions.size());
}

MetricsReport::PerScenario summarize(const env::EpisodeTrace& e) {
  MetricsReport::PerScenario p;
  p.seed = e.scenario_seed;
  p.tau = e.length();
  for (int t = 0; t < e.length(); ++t) {
    p.sum_r0 += e.r0[t];
    p.sum_c1 += e.c1[t];
    p.sum_c2 += e.c2[t];
    // violation indicators from the recorded temperatures and bounds
    const bool in_viol = (e.c_in_min[t] - e.t_hx_s_in[t]) > 0.0;
    const bool out_viol = (e.t_hx_s_out[t] - e.c_out_max[t]) > 0.0;
    if (in_viol || out_viol) p.viol_steps++;
    if (in_viol) p.d_in += e.c_in_min[t] - e.t_hx_s_in[t];
    if (out_viol) p.d_out += e.t_hx_s_out[t] - e.c_out_max[t];
  }
  p.d_in /= p.tau;
  p.d_out /= p.tau;
  p.safe = p.viol_steps == 0;
  return p;
}
}  // namespace

double reward_cost_score(const std::vector<env::EpisodeTrace>& episodes) {
  require_episodes(episodes);
  std::vector<double> c;
  for (const auto& e : episodes) {
    const auto p = summarize(e);
    c.push_back(p.sum_r0 - (p.sum_c1 + p.sum_c2));
  }
  return sorted_mean(std::move(c));
}

double violation_distance(const std::vector<env::EpisodeTrace>& episodes) {
  require_episodes(episodes);
  std::vector<double> c;
  for (const auto& e : episodes) {
    const auto p = summarize(e);
    c.push_back(p.d_in + p.d_out);
  }
  return sorted_mean(std::move(c)) / 2.0;
}

double violation_rate(const std::vector<env::EpisodeTrace>& episodes) {
  require_episodes(episodes);
  std::vector<double> c;
  for (const auto& e : episodes) {
    const auto p = summarize(e);
    c.push_back(static_cast<double>(p.viol_steps) / static_cast<double>(p.tau));
  }
  return sorted_mean(std::move(c));
}

double joint_safety_estimate(const std::vector<env::EpisodeTrace>& episodes) {
  require_episodes(episodes);
  int safe = 0;
  for (const auto& e : episodes)
    if (summarize(e).safe) safe++;
  return static_cast<double>(safe) / static_cast<double>(episodes.size());
}

MetricsReport compute_metrics(const std::vector<env::EpisodeTrace>& episodes) {
  require_episodes(episodes);
  MetricsReport r;
  r.scenario_count = static_cast<int>(episodes.size());
  for (const auto& e : episodes) r.per_scenario.push_back(summarize(e));
  r.reward_cost_score = reward_cost_score(episodes);
  r.violation_distance = violation_distance(episodes);
  r.violation_rate = violation_rate(episodes);
  r.joint_safety = joint_safety_estimate(episodes);
  return r;
}

MetricsReport evaluate_policy(const nn::Policy& policy,
                              const std::vector<env::Scenario>& scenarios,
                              const std::function<env::Environment()>& env_factory,
                              bool deterministic, uint64_t seed,
                              std::vector<env::EpisodeTrace>* traces_out) {
  if (scenarios.empty()) throw std::invalid_argument("evaluate_policy: no scenarios");

  std::vector<env::EpisodeTrace> traces;
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    env::Environment environment = env_factory();
    env::Observation obs = environment.reset(sc);
    Rng rng(mix_seed(seed, static_cast<uint64_t>(i)));

    env::EpisodeTrace trace;
    trace.scenario_seed = sc.seed;
    bool done = false;
    int t = 0;
    while (!done) {
      const double action =
          deterministic ? nn::squash_mean_action(policy, obs.flat())
                        : nn::policy_sample(policy, obs.flat(), rng).action;
      auto res = environment.step(action);
      const Eigen::VectorXd raw = environment.raw_state();
      const int tb = std::min(t + 1, sc.horizon - 1);
      trace.push(action, sc.demand[t], sc.c_in_min[tb], sc.c_out_max[tb], raw(kIdxTHxSIn),
                 raw(kIdxTHxSOut), res.reward);
      obs = res.obs;
      done = res.done;
      ++t;
    }
    traces.push_back(std::move(trace));
  }

  MetricsReport report = compute_metrics(traces);
  if (traces_out != nullptr) *traces_out = std::move(traces);
  return report;
}

void save_report_csv(const std::string& path, const MetricsReport& report) {
  CsvWriter w(path, {"scenario_seed", "sum_r0", "sum_c1", "sum_c2", "D_in", "D_out",
                     "viol_steps", "tau", "safe_episode"});
  for (const auto& p : report.per_scenario)
    w.row({static_cast<double>(p.seed), p.sum_r0, p.sum_c1, p.sum_c2, p.d_in, p.d_out,
           static_cast<double>(p.viol_steps), static_cast<double>(p.tau),
           p.safe ? 1.0 : 0.0});
  w.raw_row("# summary r_bar=" + fmt_g17(report.reward_cost_score) +
            " d=" + fmt_g17(report.violation_distance) +
            " omega=" + fmt_g17(report.violation_rate) +
            " p_hat=" + fmt_g17(report.joint_safety) +
            " n=" + fmt_int(report.scenario_count));
  w.close();
}

}  // namespace lppo::metrics
