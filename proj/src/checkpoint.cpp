#include "lppo/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

#include "lppo/romstate.hpp"
#include "lppo/textio.hpp"

namespace lppo::ckpt {

namespace {

void write_values(std::ostringstream& os, const double* data, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i)
    os << fmt_g17(data[i]) << ((i + 1) % 8 == 0 || i + 1 == n ? "\n" : " ");
}

void write_tensor(std::ostringstream& os, const std::string& name, const Eigen::MatrixXd& m) {
  os << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
  write_values(os, m.data(), m.size());
}

void write_tensor(std::ostringstream& os, const std::string& name, const Eigen::VectorXd& v) {
  os << "tensor " << name << " " << v.size() << " 1\n";
  write_values(os, v.data(), v.size());
}

struct Cursor {
  std::istringstream in;
  std::string path;

  explicit Cursor(const std::string& text, const std::string& p) : in(text), path(p) {}

  std::string token() {
    std::string t;
    if (!(in >> t)) throw std::runtime_error("checkpoint " + path + ": truncated");
    return t;
  }
  void expect(const std::string& tag) {
    const std::string got = token();
    if (got != tag)
      throw std::runtime_error("checkpoint " + path + ": expected '" + tag + "', got '" +
                               got + "'");
  }
  double number(const std::string& what) {
    std::string t = token();
    try {
      return std::stod(t);
    } catch (const std::exception&) {
      throw std::runtime_error("checkpoint " + path + ": bad number in " + what);
    }
  }
  uint64_t u64(const std::string& what) {
    std::string t = token();
    try {
      return std::stoull(t);
    } catch (const std::exception&) {
      throw std::runtime_error("checkpoint " + path + ": bad integer in " + what);
    }
  }
  std::string rest_of_line() {
    std::string line;
    std::getline(in, line);
    size_t a = 0;
    while (a < line.size() && std::isspace(static_cast<unsigned char>(line[a]))) a++;
    return line.substr(a);
  }
  void read_tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                   double* out) {
    expect("tensor");
    const std::string got = token();
    if (got != name)
      throw std::runtime_error("checkpoint " + path + ": expected tensor " + name +
                               ", got " + got);
    const auto r = static_cast<Eigen::Index>(number(name));
    const auto c = static_cast<Eigen::Index>(number(name));
    if (r != rows || c != cols)
      throw std::runtime_error("checkpoint " + path + ": tensor " + name +
                               " shape mismatch");
    for (Eigen::Index i = 0; i < rows * cols; ++i) out[i] = number(name);
  }
  /// Reads verbatim lines between begin/end markers.
  std::string block(const std::string& begin, const std::string& end) {
    expect(begin);
    std::string line;
    std::getline(in, line);  // rest of the marker line
    std::string text;
    while (std::getline(in, line)) {
      if (line == end) return text;
      text += line;
      text += "\n";
    }
    throw std::runtime_error("checkpoint " + path + ": missing " + end);
  }
};

}  // namespace

Checkpoint make_checkpoint(const config::RunConfig& cfg, const sysid::RomModel& rom,
                           const train::TrainerState& state) {
  Checkpoint c;
  c.epoch = state.epoch;
  c.config_text = cfg.resolved_text();
  c.config_hash = cfg.hash();
  c.rom_text = sysid::rom_to_text(rom);
  c.state = state;
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ostringstream os;
  os << "lppo-checkpoint v" << c.format_version << "\n";
  os << "epoch " << c.epoch << "\n";
  os << "config_hash " << c.config_hash << "\n";
  os << "config_begin\n" << c.config_text << "config_end\n";
  os << "rom_begin\n" << c.rom_text << "rom_end\n";
  os << "lambda " << fmt_g17(c.state.lambda.lambda1) << " " << fmt_g17(c.state.lambda.lambda2)
     << "\n";
  os << "lambda_history " << c.state.lambda.history.size() << "\n";
  for (const auto& h : c.state.lambda.history)
    os << fmt_g17(h[0]) << " " << fmt_g17(h[1]) << "\n";
  os << "rng " << c.state.rng.serialize() << "\n";

  const auto& p = c.state.policy;
  for (int l = 0; l < p.trunk.layer_count(); ++l) {
    write_tensor(os, "policy.trunk.w" + fmt_int(l), p.trunk.weights[l]);
    write_tensor(os, "policy.trunk.b" + fmt_int(l), p.trunk.biases[l]);
  }
  write_tensor(os, "policy.w_mean", Eigen::MatrixXd(p.w_mean));
  write_tensor(os, "policy.b_mean", Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, p.b_mean)));
  write_tensor(os, "policy.w_logstd", Eigen::MatrixXd(p.w_logstd));
  write_tensor(os, "policy.b_logstd",
               Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, p.b_logstd)));
  for (int l = 0; l < c.state.value.layer_count(); ++l) {
    write_tensor(os, "value.w" + fmt_int(l), c.state.value.weights[l]);
    write_tensor(os, "value.b" + fmt_int(l), c.state.value.biases[l]);
  }
  os << "adam_policy_step " << c.state.policy_opt.step << "\n";
  write_tensor(os, "adam.policy.m", c.state.policy_opt.m);
  write_tensor(os, "adam.policy.v", c.state.policy_opt.v);
  os << "adam_value_step " << c.state.value_opt.step << "\n";
  write_tensor(os, "adam.value.m", c.state.value_opt.m);
  write_tensor(os, "adam.value.v", c.state.value_opt.v);
  write_file(path, os.str());
}

config::RunConfig checkpoint_config(const Checkpoint& c) {
  return config::parse_config_text(c.config_text, "<checkpoint config>");
}

sysid::RomModel checkpoint_rom(const Checkpoint& c) {
  return sysid::rom_from_text(c.rom_text, "<checkpoint rom>");
}

Checkpoint load_checkpoint(const std::string& path) {
  Cursor cur(read_file(path), path);
  cur.expect("lppo-checkpoint");
  const std::string version = cur.token();
  if (version != "v1")
    throw std::runtime_error("checkpoint " + path + ": unsupported version " + version);

  Checkpoint c;
  cur.expect("epoch");
  c.epoch = static_cast<int>(cur.number("epoch"));
  cur.expect("config_hash");
  c.config_hash = cur.u64("config_hash");
  c.config_text = cur.block("config_begin", "config_end");
  c.rom_text = cur.block("rom_begin", "rom_end");

  const config::RunConfig cfg = checkpoint_config(c);
  c.state = train::init_trainer(cfg.train_config(), kRomStateDim + 3, cfg.action_min,
                                cfg.action_max);
  c.state.epoch = c.epoch;

  cur.expect("lambda");
  c.state.lambda.lambda1 = cur.number("lambda1");
  c.state.lambda.lambda2 = cur.number("lambda2");
  cur.expect("lambda_history");
  const int n_hist = static_cast<int>(cur.number("lambda_history"));
  c.state.lambda.history.clear();
  for (int i = 0; i < n_hist; ++i) {
    const double a = cur.number("lambda_history");
    const double b = cur.number("lambda_history");
    c.state.lambda.history.push_back({a, b});
  }

  cur.expect("rng");
  c.state.rng.deserialize(cur.rest_of_line());

  auto& p = c.state.policy;
  for (int l = 0; l < p.trunk.layer_count(); ++l) {
    cur.read_tensor("policy.trunk.w" + fmt_int(l), p.trunk.weights[l].rows(),
                    p.trunk.weights[l].cols(), p.trunk.weights[l].data());
    cur.read_tensor("policy.trunk.b" + fmt_int(l), p.trunk.biases[l].size(), 1,
                    p.trunk.biases[l].data());
  }
  Eigen::MatrixXd wm(1, p.w_mean.size()), wl(1, p.w_logstd.size()), scalar(1, 1);
  cur.read_tensor("policy.w_mean", 1, p.w_mean.size(), wm.data());
  p.w_mean = wm.row(0);
  cur.read_tensor("policy.b_mean", 1, 1, scalar.data());
  p.b_mean = scalar(0, 0);
  cur.read_tensor("policy.w_logstd", 1, p.w_logstd.size(), wl.data());
  p.w_logstd = wl.row(0);
  cur.read_tensor("policy.b_logstd", 1, 1, scalar.data());
  p.b_logstd = scalar(0, 0);
  auto& v = c.state.value;
  for (int l = 0; l < v.layer_count(); ++l) {
    cur.read_tensor("value.w" + fmt_int(l), v.weights[l].rows(), v.weights[l].cols(),
                    v.weights[l].data());
    cur.read_tensor("value.b" + fmt_int(l), v.biases[l].size(), 1, v.biases[l].data());
  }
  cur.expect("adam_policy_step");
  c.state.policy_opt.step = static_cast<long long>(cur.number("adam_policy_step"));
  cur.read_tensor("adam.policy.m", c.state.policy_opt.m.size(), 1,
                  c.state.policy_opt.m.data());
  cur.read_tensor("adam.policy.v", c.state.policy_opt.v.size(), 1,
                  c.state.policy_opt.v.data());
  cur.expect("adam_value_step");
  c.state.value_opt.step = static_cast<long long>(cur.number("adam_value_step"));
  cur.read_tensor("adam.value.m", c.state.value_opt.m.size(), 1, c.state.value_opt.m.data());
  cur.read_tensor("adam.value.v", c.state.value_opt.v.size(), 1, c.state.value_opt.v.data());
  return c;
}

}  // namespace lppo::ckpt
