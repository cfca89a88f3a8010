#include "lppo/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "lppo/textio.hpp"

namespace lppo::config {

namespace {

enum class Kind { kDouble, kInt, kU64, kBool };

struct Key {
  const char* name;
  Kind kind;
  std::function<double(const RunConfig&)> get;
  std::function<void(RunConfig&, double)> set;
};

// Registry of every configuration key, in canonical order.
const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    auto add = [&k](const char* name, Kind kind, auto member_get, auto member_set) {
      k.push_back({name, kind, member_get, member_set});
    };
#define KEY_D(NAME, EXPR)                                              \
  add(NAME, Kind::kDouble, [](const RunConfig& c) { return (EXPR); }, \
      [](RunConfig& c, double v) { (EXPR) = v; })
#define KEY_I(NAME, EXPR)                                                                  \
  add(NAME, Kind::kInt, [](const RunConfig& c) { return static_cast<double>(EXPR); },     \
      [](RunConfig& c, double v) { (EXPR) = static_cast<int>(std::llround(v)); })
#define KEY_U(NAME, EXPR)                                                                  \
  add(NAME, Kind::kU64, [](const RunConfig& c) { return static_cast<double>(EXPR); },     \
      [](RunConfig& c, double v) { (EXPR) = static_cast<uint64_t>(std::llround(v)); })
#define KEY_B(NAME, EXPR)                                                                  \
  add(NAME, Kind::kBool, [](const RunConfig& c) { return (EXPR) ? 1.0 : 0.0; },           \
      [](RunConfig& c, double v) { (EXPR) = v != 0.0; })

    KEY_U("seed", c.seed);
    KEY_I("T", c.horizon);
    KEY_I("n_train", c.n_train);
    KEY_I("n_val", c.n_val);
    KEY_I("n_test", c.n_test);
    KEY_D("action_min", c.action_min);
    KEY_D("action_max", c.action_max);

    KEY_D("demand_min_level", c.demand.min_level);
    KEY_I("demand_min_ramps", c.demand.min_ramps);
    KEY_I("demand_max_ramps", c.demand.max_ramps);
    KEY_D("demand_max_rate", c.demand.max_rate_per_s);
    KEY_D("demand_min_rate", c.demand.min_rate_per_s);
    KEY_I("demand_min_hold", c.demand.min_hold_steps);
    KEY_I("demand_max_hold", c.demand.max_hold_steps);

    KEY_I("sched_max_changes", c.schedule.max_step_changes);
    KEY_D("c_in_min_lo", c.schedule.c_in_min_lo);
    KEY_D("c_in_min_hi", c.schedule.c_in_min_hi);
    KEY_D("c_out_max_lo", c.schedule.c_out_max_lo);
    KEY_D("c_out_max_hi", c.schedule.c_out_max_hi);
    KEY_I("sched_min_segment", c.schedule.min_segment_steps);

    KEY_I("rom_degree", c.rom_degree);
    KEY_D("rom_threshold", c.rom_threshold);
    KEY_I("rom_subsample", c.rom_subsample);
    KEY_D("rom_holdout", c.rom_holdout);
    KEY_I("rom_max_iters", c.rom_max_iters);
    KEY_D("dt_record", c.dt_record);
    KEY_I("n_sysid_trajectories", c.n_sysid_trajectories);
    KEY_D("sysid_dither", c.sysid_dither);

    KEY_D("gamma", c.trainer.discount);
    KEY_D("xi", c.trainer.gae_decay);
    KEY_D("clip", c.trainer.clip_ratio);
    KEY_D("kl_threshold", c.trainer.kl_threshold);
    KEY_D("delta", c.trainer.cost_budget);
    KEY_D("lambda_lr", c.trainer.lambda_lr);
    KEY_D("policy_lr", c.trainer.policy_lr);
    KEY_D("value_lr", c.trainer.value_lr);
    KEY_I("epochs", c.trainer.epochs);
    KEY_I("workers", c.trainer.workers);
    KEY_I("sub_episodes", c.trainer.sub_episodes);
    KEY_I("policy_iters", c.trainer.policy_iters);
    KEY_I("value_iters", c.trainer.value_iters);
    KEY_B("fixed_lambda", c.trainer.fixed_lambda);
    KEY_D("fixed_lambda1", c.trainer.fixed_lambda1);
    KEY_D("fixed_lambda2", c.trainer.fixed_lambda2);
    KEY_I("checkpoint_every", c.trainer.checkpoint_every);
    KEY_I("hidden", c.trainer.hidden);
    KEY_D("init_logstd", c.trainer.init_logstd);
    KEY_D("init_mean_action", c.trainer.init_mean_action);
    KEY_D("logstd_min", c.trainer.logstd_min);
    KEY_D("logstd_max", c.trainer.logstd_max);

    KEY_D("beta", c.plant.beta);
    KEY_D("lambda_gen", c.plant.lambda_gen);
    KEY_D("lambda_d", c.plant.lambda_d);
    KEY_D("alpha_f", c.plant.alpha_f);
    KEY_D("alpha_c", c.plant.alpha_c);
    KEY_D("tau_core_out", c.plant.tau_core_out);
    KEY_D("tau_core_in", c.plant.tau_core_in);
    KEY_D("tau_hx_s_out", c.plant.tau_hx_s_out);
    KEY_D("tau_hx_s_in", c.plant.tau_hx_s_in);
    KEY_D("tau_q_hx", c.plant.tau_q_hx);
    KEY_D("tau_q_sg", c.plant.tau_q_sg);
    KEY_D("tau_pressure", c.plant.tau_pressure);
    KEY_D("r_p", c.plant.r_p);
    KEY_D("r_s", c.plant.r_s);
    KEY_D("k_hx", c.plant.k_hx);
    KEY_D("k_sg", c.plant.k_sg);
    KEY_D("t_sink", c.plant.t_sink);
    KEY_D("flow_exp", c.plant.flow_exp);
    KEY_D("k_dp", c.plant.k_dp);
    KEY_D("t_core_in_nom", c.plant.t_core_in_nom);
    KEY_D("t_core_out_nom", c.plant.t_core_out_nom);
    KEY_D("dt_plant", c.plant.dt_plant);
    KEY_D("pid_power_kp", c.plant.pid_power.kp);
    KEY_D("pid_power_ki", c.plant.pid_power.ki);
    KEY_D("pid_power_kd", c.plant.pid_power.kd);
    KEY_D("pid_power_min", c.plant.pid_power.out_min);
    KEY_D("pid_power_max", c.plant.pid_power.out_max);
    KEY_D("pid_mdot_p_kp", c.plant.pid_mdot_p.kp);
    KEY_D("pid_mdot_p_ki", c.plant.pid_mdot_p.ki);
    KEY_D("pid_mdot_p_kd", c.plant.pid_mdot_p.kd);
    KEY_D("pid_mdot_p_min", c.plant.pid_mdot_p.out_min);
    KEY_D("pid_mdot_p_max", c.plant.pid_mdot_p.out_max);
    KEY_D("pid_mdot_s_kp", c.plant.pid_mdot_s.kp);
    KEY_D("pid_mdot_s_ki", c.plant.pid_mdot_s.ki);
    KEY_D("pid_mdot_s_kd", c.plant.pid_mdot_s.kd);
    KEY_D("pid_mdot_s_min", c.plant.pid_mdot_s.out_min);
    KEY_D("pid_mdot_s_max", c.plant.pid_mdot_s.out_max);
#undef KEY_D
#undef KEY_I
#undef KEY_U
#undef KEY_B
    return k;
  }();
  return keys;
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) a++;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) b--;
  return s.substr(a, b - a);
}

}  // namespace

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& key : registry()) {
    const double v = key.get(*this);
    switch (key.kind) {
      case Kind::kDouble:
        os << key.name << " = " << fmt_g17(v) << "\n";
        break;
      default:
        os << key.name << " = " << fmt_int(static_cast<long long>(v)) << "\n";
        break;
    }
  }
  return os.str();
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t RunConfig::hash() const { return fnv1a64(resolved_text()); }

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig t = trainer;
  t.horizon = horizon;
  t.seed = seed;
  return t;
}

env::EnvParams RunConfig::env_params() const {
  env::EnvParams p;
  p.action_min = action_min;
  p.action_max = action_max;
  return p;
}

sysid::IdentifyOptions RunConfig::identify_options() const {
  sysid::IdentifyOptions o;
  o.subsample_factor = rom_subsample;
  o.threshold = rom_threshold;
  o.holdout_fraction = rom_holdout;
  o.max_iters = rom_max_iters;
  o.dt_record = dt_record;
  return o;
}

void RunConfig::validate() const {
  auto req = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  plant.validate();
  req(horizon >= 2, "T must be >= 2");
  req(n_train >= 1 && n_val >= 1 && n_test >= 1, "scenario counts must be >= 1");
  req(action_max > action_min, "action bounds inverted");
  req(demand.min_level >= action_min && demand.min_level < 1.0,
      "demand_min_level out of range");
  req(demand.min_ramps >= 0 && demand.max_ramps >= demand.min_ramps, "ramp counts invalid");
  req(demand.min_rate_per_s > 0 && demand.max_rate_per_s >= demand.min_rate_per_s,
      "demand rates invalid");
  req(schedule.c_in_min_lo <= schedule.c_in_min_hi, "c_in_min range inverted");
  req(schedule.c_out_max_lo <= schedule.c_out_max_hi, "c_out_max range inverted");
  req(schedule.c_in_min_hi < schedule.c_out_max_lo, "constraint ranges overlap");
  req(rom_degree == 1 || rom_degree == 2, "rom_degree must be 1 or 2");
  req(rom_threshold >= 0, "rom_threshold must be >= 0");
  req(rom_subsample >= 1, "rom_subsample must be >= 1");
  req(rom_holdout > 0 && rom_holdout < 1, "rom_holdout must be in (0,1)");
  req(dt_record > 0, "dt_record must be > 0");
  req(n_sysid_trajectories >= 2, "n_sysid_trajectories must be >= 2");
  // trim feasibility at the demand anchor and schedule containment
  const plant::PlantState nominal = plant::trim(1.0, plant);
  req(schedule.c_in_min_hi < nominal.t_hx_s_in,
      "c_in_min_hi must lie strictly below the nominal-trim HX inlet temperature");
  req(schedule.c_out_max_lo > nominal.t_hx_s_out,
      "c_out_max_lo must lie strictly above the nominal-trim HX outlet temperature");
  // dt consistency: dt_record on the control grid, dt_rom on the record grid
  const double steps_per_record = dt_record / plant.dt_plant;
  req(std::fabs(steps_per_record - std::llround(steps_per_record)) < 1e-9 &&
          steps_per_record >= 1,
      "dt_record must be an integer multiple of dt_plant");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::map<std::string, const Key*> by_name;
  for (const auto& k : registry()) by_name[k.name] = &k;

  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + fmt_int(line_no) +
                                  ": expected 'key = value'");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      unknown.push_back(name);
      continue;
    }
    const Key& key = *it->second;
    if (key.kind == Kind::kDouble) {
      key.set(cfg, parse_double(value, name));
    } else {
      const long long v = parse_int(value, name);
      if (key.kind == Kind::kBool && v != 0 && v != 1)
        throw std::invalid_argument(origin + ": key " + name + " must be 0 or 1");
      key.set(cfg, static_cast<double>(v));
    }
  }
  if (!unknown.empty()) {
    std::string msg = origin + ": unknown key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw std::invalid_argument(msg);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

}  // namespace lppo::config
