#include "lppo/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace lppo::nn {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}
}  // namespace

double log1m_tanh_sq(double u) {
  // log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u))
  return 2.0 * (0.6931471805599453094172321214582 - u - softplus(-2.0 * u));
}

Mlp Mlp::make(const std::vector<int>& sizes, Rng& rng, bool output_tanh,
              double last_layer_scale) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least two layer sizes");
  Mlp mlp;
  mlp.output_tanh = output_tanh;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out)) *
                         (l + 2 == sizes.size() ? last_layer_scale : 1.0);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return mlp;
}

int Mlp::param_count() const {
  int n = 0;
  for (size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd flat(param_count());
  Eigen::Index at = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(weights[l].data(), weights[l].size());
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return flat;
}

void Mlp::set_from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("mlp: flat parameter size mismatch");
  Eigen::Index at = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(weights[l].data(), weights[l].size()) =
        flat.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

MlpCache mlp_forward(const Mlp& mlp, const Eigen::MatrixXd& input) {
  if (input.cols() != mlp.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  MlpCache cache;
  cache.input = input;
  Eigen::MatrixXd h = input;
  for (int l = 0; l < mlp.layer_count(); ++l) {
    Eigen::MatrixXd z =
        (h * mlp.weights[l].transpose()).rowwise() + mlp.biases[l].transpose();
    const bool last = l + 1 == mlp.layer_count();
    if (!last || mlp.output_tanh) z = z.array().tanh();
    cache.activations.push_back(z);
    h = std::move(z);
  }
  return cache;
}

MlpGrads mlp_backward(const Mlp& mlp, const MlpCache& cache, const Eigen::MatrixXd& upstream) {
  if (static_cast<int>(cache.activations.size()) != mlp.layer_count() ||
      cache.input.cols() != mlp.input_dim())
    throw std::invalid_argument("mlp_backward: cache does not match network");
  if (upstream.rows() != cache.input.rows() || upstream.cols() != mlp.output_dim())
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");

  MlpGrads grads;
  grads.d_weights.resize(mlp.layer_count());
  grads.d_biases.resize(mlp.layer_count());

  Eigen::MatrixXd g = upstream;
  for (int l = mlp.layer_count() - 1; l >= 0; --l) {
    const bool last = l + 1 == mlp.layer_count();
    if (!last || mlp.output_tanh) {
      // through tanh: dz = g * (1 - h^2)
      g = g.array() * (1.0 - cache.activations[l].array().square());
    }
    const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.activations[l - 1];
    grads.d_weights[l] = g.transpose() * below;
    grads.d_biases[l] = g.colwise().sum().transpose();
    if (l > 0) g = g * mlp.weights[l];
  }
  grads.d_input = g * mlp.weights[0];
  return grads;
}

Eigen::VectorXd MlpGrads::flatten() const {
  Eigen::Index n = 0;
  for (size_t l = 0; l < d_weights.size(); ++l) n += d_weights[l].size() + d_biases[l].size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (size_t l = 0; l < d_weights.size(); ++l) {
    flat.segment(at, d_weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(d_weights[l].data(), d_weights[l].size());
    at += d_weights[l].size();
    flat.segment(at, d_biases[l].size()) = d_biases[l];
    at += d_biases[l].size();
  }
  return flat;
}

Policy Policy::make(int obs_dim, int hidden, double action_min, double action_max,
                    double init_mean_action, double init_logstd, Rng& rng) {
  if (!(action_max > action_min)) throw std::invalid_argument("policy: bad action bounds");
  Policy p;
  p.trunk = Mlp::make({obs_dim, hidden, hidden}, rng, /*output_tanh=*/true);
  p.action_min = action_min;
  p.action_max = action_max;
  const double limit = 0.01;
  p.w_mean.resize(hidden);
  p.w_logstd.resize(hidden);
  for (int i = 0; i < hidden; ++i) {
    p.w_mean(i) = rng.uniform(-limit, limit);
    p.w_logstd(i) = rng.uniform(-limit, limit);
  }
  p.b_mean = p.unsquash(init_mean_action);
  p.b_logstd = init_logstd;
  return p;
}

double Policy::squash(double u) const {
  return action_min + width() * 0.5 * (std::tanh(u) + 1.0);
}

double Policy::unsquash(double action) const {
  const double y = 2.0 * (action - action_min) / width() - 1.0;
  if (!(y > -1.0 && y < 1.0))
    throw std::domain_error("policy: action at or outside bounds");
  return std::atanh(y);
}

int Policy::param_count() const {
  return trunk.param_count() + 2 * static_cast<int>(w_mean.size()) + 2;
}

Eigen::VectorXd Policy::flatten() const {
  Eigen::VectorXd flat(param_count());
  Eigen::Index at = 0;
  const Eigen::VectorXd t = trunk.flatten();
  flat.segment(at, t.size()) = t;
  at += t.size();
  flat.segment(at, w_mean.size()) = w_mean.transpose();
  at += w_mean.size();
  flat(at++) = b_mean;
  flat.segment(at, w_logstd.size()) = w_logstd.transpose();
  at += w_logstd.size();
  flat(at++) = b_logstd;
  return flat;
}

void Policy::set_from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("policy: flat parameter size mismatch");
  Eigen::Index at = 0;
  Eigen::VectorXd t = flat.segment(at, trunk.param_count());
  trunk.set_from_flat(t);
  at += t.size();
  w_mean = flat.segment(at, w_mean.size()).transpose();
  at += w_mean.size();
  b_mean = flat(at++);
  w_logstd = flat.segment(at, w_logstd.size()).transpose();
  at += w_logstd.size();
  b_logstd = flat(at++);
}

PolicyHeads policy_forward(const Policy& policy, const Eigen::MatrixXd& obs) {
  PolicyHeads h;
  h.trunk_cache = mlp_forward(policy.trunk, obs);
  const Eigen::MatrixXd& f = h.trunk_cache.output();
  h.mu = (f * policy.w_mean.transpose()).array() + policy.b_mean;
  h.logstd_raw = (f * policy.w_logstd.transpose()).array() + policy.b_logstd;
  h.logstd = h.logstd_raw.cwiseMax(policy.logstd_min).cwiseMin(policy.logstd_max);
  return h;
}

Eigen::VectorXd policy_backward(const Policy& policy, const PolicyHeads& heads,
                                const Eigen::VectorXd& d_mu,
                                const Eigen::VectorXd& d_logstd) {
  // clamp gate: no gradient where the raw log-std was clipped
  Eigen::VectorXd d_ls = d_logstd;
  for (Eigen::Index i = 0; i < d_ls.size(); ++i)
    if (heads.logstd_raw(i) < policy.logstd_min || heads.logstd_raw(i) > policy.logstd_max)
      d_ls(i) = 0.0;

  const Eigen::MatrixXd& f = heads.trunk_cache.output();
  Eigen::RowVectorXd dw_mean = d_mu.transpose() * f;
  const double db_mean = d_mu.sum();
  Eigen::RowVectorXd dw_logstd = d_ls.transpose() * f;
  const double db_logstd = d_ls.sum();

  Eigen::MatrixXd d_f = d_mu * policy.w_mean + d_ls * policy.w_logstd;
  MlpGrads trunk_grads = mlp_backward(policy.trunk, heads.trunk_cache, d_f);

  Eigen::VectorXd flat(policy.param_count());
  Eigen::Index at = 0;
  const Eigen::VectorXd tg = trunk_grads.flatten();
  flat.segment(at, tg.size()) = tg;
  at += tg.size();
  flat.segment(at, dw_mean.size()) = dw_mean.transpose();
  at += dw_mean.size();
  flat(at++) = db_mean;
  flat.segment(at, dw_logstd.size()) = dw_logstd.transpose();
  at += dw_logstd.size();
  flat(at++) = db_logstd;
  return flat;
}

double logprob_from_u(double mu, double logstd, double u, double action_width) {
  const double sigma = std::exp(logstd);
  const double z = (u - mu) / sigma;
  return -0.5 * z * z - logstd - 0.5 * kLog2Pi - log1m_tanh_sq(u) -
         std::log(action_width / 2.0);
}

SampleResult policy_sample(const Policy& policy, const Eigen::VectorXd& obs, Rng& rng) {
  for (Eigen::Index i = 0; i < obs.size(); ++i)
    if (!std::isfinite(obs(i))) throw std::domain_error("policy_sample: non-finite obs");
  PolicyHeads h = policy_forward(policy, obs.transpose());
  const double sigma = std::exp(h.logstd(0));
  SampleResult r;
  r.pre_squash = h.mu(0) + sigma * rng.normal();
  r.action = policy.squash(r.pre_squash);
  r.log_prob = logprob_from_u(h.mu(0), h.logstd(0), r.pre_squash, policy.width());
  return r;
}

double policy_logprob(const Policy& policy, const Eigen::VectorXd& obs, double action) {
  const double u = policy.unsquash(action);
  PolicyHeads h = policy_forward(policy, obs.transpose());
  return logprob_from_u(h.mu(0), h.logstd(0), u, policy.width());
}

double policy_entropy(const Policy& policy, const Eigen::VectorXd& obs) {
  PolicyHeads h = policy_forward(policy, obs.transpose());
  // 0.5*log(2*pi*e) + logstd
  return 0.5 * (kLog2Pi + 1.0) + h.logstd(0);
}

double squash_mean_action(const Policy& policy, const Eigen::VectorXd& obs) {
  PolicyHeads h = policy_forward(policy, obs.transpose());
  return policy.squash(h.mu(0));
}

AdamState AdamState::make(int n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

bool adam_step(AdamState& opt, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               double lr) {
  if (!(lr > 0)) throw std::invalid_argument("adam_step: lr must be > 0");
  if (params.size() != grads.size() || params.size() != opt.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!grads.allFinite()) return false;  // skip, flagged to the caller

  opt.step += 1;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  params.array() -=
      lr * (opt.m.array() / bc1) / ((opt.v.array() / bc2).sqrt() + opt.eps);
  return true;
}

GradCheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                           const Eigen::VectorXd& params, int probes, double h, Rng& rng) {
  if (probes < 1) throw std::invalid_argument("grad_check: probes must be >= 1");
  if (!(h > 0)) throw std::invalid_argument("grad_check: h must be > 0");

  const Eigen::VectorXd g = grad(params);
  GradCheckReport report;
  report.probe_count = probes;
  for (int p = 0; p < probes; ++p) {
    const int i = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(params.size())));
    Eigen::VectorXd plus = params, minus = params;
    plus(i) += h;
    minus(i) -= h;
    const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
    const double rel = std::fabs(g(i) - fd) / std::max(1e-12, std::fabs(g(i)) + std::fabs(fd));
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = i;
    }
  }
  return report;
}

}  // namespace lppo::nn
