#include "lppo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lppo/rng.hpp"
#include "lppo/textio.hpp"

namespace lppo::env {

namespace {
constexpr uint64_t kDemandStream = 0xd3a1;
constexpr uint64_t kScheduleStream = 0x5c8e;
}  // namespace

std::vector<double> gen_demand(uint64_t seed, int horizon, const DemandParams& params) {
  if (horizon < 2) throw std::invalid_argument("gen_demand: horizon must be >= 2");
  Rng rng(mix_seed(seed, kDemandStream));

  std::vector<double> demand(horizon, 1.0);
  const int n_ramps =
      params.max_ramps <= 0
          ? 0
          : params.min_ramps +
                static_cast<int>(rng.uniform_int(
                    static_cast<uint64_t>(params.max_ramps - params.min_ramps + 1)));

  int t = params.min_hold_steps +
          static_cast<int>(rng.uniform_int(
              static_cast<uint64_t>(params.max_hold_steps - params.min_hold_steps + 1)));
  double level = 1.0;
  for (int r = 0; r < n_ramps && t < horizon; ++r) {
    const double target = rng.uniform(params.min_level, 1.0);
    const double rate = rng.uniform(params.min_rate_per_s, params.max_rate_per_s);
    const double step_delta = rate * params.dt_step_s;
    while (t < horizon && std::fabs(target - level) > 1e-12) {
      const double move = std::clamp(target - level, -step_delta, step_delta);
      level += move;
      demand[t++] = level;
    }
    const int hold = params.min_hold_steps +
                     static_cast<int>(rng.uniform_int(static_cast<uint64_t>(
                         params.max_hold_steps - params.min_hold_steps + 1)));
    for (int h = 0; h < hold && t < horizon; ++h) demand[t++] = level;
  }
  while (t < horizon) demand[t++] = level;
  return demand;
}

Schedule gen_constraint_schedule(uint64_t seed, int horizon, const ScheduleParams& params) {
  if (horizon < 2) throw std::invalid_argument("gen_constraint_schedule: horizon must be >= 2");
  Rng rng(mix_seed(seed, kScheduleStream));

  const int n_changes =
      params.max_step_changes <= 0
          ? 0
          : static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.max_step_changes + 1)));

  std::vector<int> change_at;
  for (int i = 0; i < n_changes; ++i) {
    const int lo = params.min_segment_steps;
    const int hi = std::max(lo + 1, horizon - params.min_segment_steps);
    change_at.push_back(lo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(hi - lo))));
  }
  std::sort(change_at.begin(), change_at.end());
  change_at.push_back(horizon);

  Schedule s;
  s.c_in_min.resize(horizon);
  s.c_out_max.resize(horizon);
  int t = 0;
  for (int seg = 0; seg <= n_changes; ++seg) {
    const double in_min = rng.uniform(params.c_in_min_lo, params.c_in_min_hi);
    const double out_max = rng.uniform(params.c_out_max_lo, params.c_out_max_hi);
    for (; t < change_at[seg] && t < horizon; ++t) {
      s.c_in_min[t] = in_min;
      s.c_out_max[t] = out_max;
    }
  }
  return s;
}

Scenario make_scenario(uint64_t seed, int horizon, const std::string& split_tag,
                       const DemandParams& dp, const ScheduleParams& sp) {
  Scenario s;
  s.seed = seed;
  s.horizon = horizon;
  s.split_tag = split_tag;
  s.demand = gen_demand(seed, horizon, dp);
  auto sched = gen_constraint_schedule(seed, horizon, sp);
  s.c_in_min = std::move(sched.c_in_min);
  s.c_out_max = std::move(sched.c_out_max);
  return s;
}

ScenarioSet make_scenario_set(uint64_t master_seed, int n_train, int n_val, int n_test,
                              int horizon, const DemandParams& dp, const ScheduleParams& sp) {
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw std::invalid_argument("make_scenario_set: counts must be >= 1");
  ScenarioSet set;
  uint64_t counter = 0;
  auto next_seed = [&]() { return mix_seed(master_seed, counter++); };
  for (int i = 0; i < n_train; ++i)
    set.train.push_back(make_scenario(next_seed(), horizon, "train", dp, sp));
  for (int i = 0; i < n_val; ++i)
    set.val.push_back(make_scenario(next_seed(), horizon, "val", dp, sp));
  for (int i = 0; i < n_test; ++i)
    set.test.push_back(make_scenario(next_seed(), horizon, "test", dp, sp));
  return set;
}

void save_scenario(const std::string& path, const Scenario& s) {
  CsvWriter w(path, {"t", "demand", "c_in_min", "c_out_max"},
              {"# seed=" + std::to_string(s.seed) + " split=" + s.split_tag});
  for (int t = 0; t < s.horizon; ++t)
    w.row({static_cast<double>(t), s.demand[t], s.c_in_min[t], s.c_out_max[t]});
  w.close();
}

Scenario load_scenario(const std::string& path) {
  CsvTable t = read_csv(path);
  Scenario s;
  for (const auto& c : t.comments) {
    const auto seed_pos = c.find("seed=");
    const auto split_pos = c.find("split=");
    if (seed_pos != std::string::npos)
      s.seed = std::stoull(c.substr(seed_pos + 5));
    if (split_pos != std::string::npos) {
      std::string tag = c.substr(split_pos + 6);
      while (!tag.empty() && std::isspace(static_cast<unsigned char>(tag.back()))) tag.pop_back();
      s.split_tag = tag;
    }
  }
  const int ct = t.col("t"), cd = t.col("demand"), ci = t.col("c_in_min"), co = t.col("c_out_max");
  (void)ct;
  s.horizon = static_cast<int>(t.rows.size());
  for (const auto& row : t.rows) {
    s.demand.push_back(row[cd]);
    s.c_in_min.push_back(row[ci]);
    s.c_out_max.push_back(row[co]);
  }
  if (s.horizon < 2) throw std::invalid_argument("scenario file too short: " + path);
  return s;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::string out = "file,seed,split\n";
  for (const auto& e : entries)
    out += e.file + "," + std::to_string(e.seed) + "," + e.split + "\n";
  write_file(path, out);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<ManifestEntry> entries;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = split_csv(line);
    if (f.size() != 3) throw std::invalid_argument("manifest: malformed line in " + path);
    entries.push_back({f[0], std::stoull(f[1]), f[2]});
  }
  return entries;
}

std::vector<Scenario> load_scenarios(const std::string& dir, const std::string& split) {
  std::vector<Scenario> out;
  for (const auto& entry : load_manifest(dir + "/manifest.csv"))
    if (entry.split == split) out.push_back(load_scenario(dir + "/" + entry.file));
  if (out.empty())
    throw std::invalid_argument("no scenarios with split '" + split + "' under " + dir);
  return out;
}

}  // namespace lppo::env
