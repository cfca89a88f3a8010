#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "lppo/nn.hpp"
#include "lppo/rng.hpp"

using namespace lppo;
using namespace lppo::nn;

TEST_CASE("mlp forward: zero network and single linear layer") {
  Rng rng(1);
  Mlp zero = Mlp::make({3, 4, 2}, rng);
  for (auto& w : zero.weights) w.setZero();
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  CHECK(mlp_forward(zero, x).output().cwiseAbs().maxCoeff() == 0.0);

  Mlp lin = Mlp::make({1, 1}, rng);
  lin.weights[0](0, 0) = 2.0;
  lin.biases[0](0) = 1.0;
  Eigen::MatrixXd x1(1, 1);
  x1 << 3.0;
  CHECK(mlp_forward(lin, x1).output()(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("mlp forward purity and shape contract") {
  Rng rng(2);
  Mlp mlp = Mlp::make({4, 8, 2}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
  CHECK(mlp_forward(mlp, x).output() == mlp_forward(mlp, x).output());
  Eigen::MatrixXd bad = Eigen::MatrixXd::Random(6, 5);
  CHECK_THROWS_AS(mlp_forward(mlp, bad), std::invalid_argument);
}

TEST_CASE("mlp backward: linear-layer closed form") {
  Rng rng(3);
  Mlp lin = Mlp::make({3, 2}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  const auto cache = mlp_forward(lin, x);
  Eigen::MatrixXd g = Eigen::MatrixXd::Random(4, 2);
  const auto grads = mlp_backward(lin, cache, g);
  CHECK((grads.d_weights[0] - g.transpose() * x).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((grads.d_biases[0] - g.colwise().sum().transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((grads.d_input - g * lin.weights[0]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp backward: zero upstream gives zero gradients") {
  Rng rng(4);
  Mlp mlp = Mlp::make({3, 6, 6, 1}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  const auto cache = mlp_forward(mlp, x);
  const auto grads = mlp_backward(mlp, cache, Eigen::MatrixXd::Zero(5, 1));
  CHECK(grads.flatten().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp backward: mismatched cache rejected") {
  Rng rng(5);
  Mlp a = Mlp::make({3, 6, 1}, rng);
  Mlp b = Mlp::make({2, 6, 1}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  const auto cache = mlp_forward(a, x);
  CHECK_THROWS_AS(mlp_backward(b, cache, Eigen::MatrixXd::Zero(5, 1)), std::invalid_argument);
  CHECK_THROWS_AS(mlp_backward(a, cache, Eigen::MatrixXd::Zero(4, 1)), std::invalid_argument);
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(6);
  Mlp mlp = Mlp::make({4, 8, 8, 1}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(16, 4);

  auto loss = [&](const Eigen::VectorXd& flat) {
    Mlp m = mlp;
    m.set_from_flat(flat);
    const auto out = mlp_forward(m, x).output();
    return 0.5 * out.squaredNorm();
  };
  auto grad = [&](const Eigen::VectorXd& flat) {
    Mlp m = mlp;
    m.set_from_flat(flat);
    const auto cache = mlp_forward(m, x);
    return mlp_backward(m, cache, cache.output()).flatten();
  };
  Rng probe_rng(7);
  const auto report = grad_check(loss, grad, mlp.flatten(), 100, 1e-5, probe_rng);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("sampled actions stay strictly inside the bounds") {
  Rng rng(8);
  Policy p = Policy::make(5, 16, 0.4, 1.05, 1.0, -0.5, rng);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd obs = Eigen::VectorXd::Random(5) * 3.0;
    for (int i = 0; i < 100000; ++i) {
      const auto s = policy_sample(p, obs, rng);
      CHECK(s.action > 0.4);
      CHECK(s.action < 1.05);
    }
  }
}

TEST_CASE("log-prob closed form at the distribution center") {
  // mu = 0, sigma = 1, u = 0, bounds (-1, 1): corrections vanish
  const double lp = logprob_from_u(0.0, 0.0, 0.0, 2.0);
  CHECK(lp == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("squashed density integrates to one") {
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const double mu = rng.uniform(-1.0, 1.0);
    const double logstd = rng.uniform(-1.2, 0.4);
    const double a_min = 0.4, a_max = 1.05, width = a_max - a_min;

    // Simpson's rule over the open action interval
    const int n = 40000;
    const double eps = 1e-9;
    const double lo = a_min + eps, hi = a_max - eps;
    const double h = (hi - lo) / n;
    auto density = [&](double a) {
      const double y = 2.0 * (a - a_min) / width - 1.0;
      const double u = std::atanh(y);
      return std::exp(logprob_from_u(mu, logstd, u, width));
    };
    double sum = density(lo) + density(hi);
    for (int i = 1; i < n; ++i) sum += density(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    const double integral = sum * h / 3.0;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("sample/logprob round trip") {
  Rng rng(10);
  Policy p = Policy::make(4, 16, 0.4, 1.05, 0.9, -0.3, rng);
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd obs = Eigen::VectorXd::Random(4);
    const auto s = policy_sample(p, obs, rng);
    const double lp = policy_logprob(p, obs, s.action);
    CHECK(std::fabs(lp - s.log_prob) < 1e-10);
  }
}

TEST_CASE("logprob rejects actions at or outside the bounds") {
  Rng rng(11);
  Policy p = Policy::make(3, 8, 0.4, 1.05, 1.0, -0.5, rng);
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(policy_logprob(p, obs, 0.4), std::domain_error);
  CHECK_THROWS_AS(policy_logprob(p, obs, 1.05), std::domain_error);
  CHECK_THROWS_AS(policy_logprob(p, obs, 1.2), std::domain_error);
}

TEST_CASE("logprob gradient w.r.t. policy parameters matches finite differences") {
  Rng rng(12);
  Policy p = Policy::make(4, 8, 0.4, 1.05, 0.95, -0.4, rng);
  const int n = 32;
  Eigen::MatrixXd obs = Eigen::MatrixXd::Random(n, 4);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u(i) = rng.normal(1.0, 0.7);

  // summed (not averaged) log-likelihood keeps gradient coordinates well
  // above the central-difference noise floor
  auto loss = [&](const Eigen::VectorXd& flat) {
    Policy pol = p;
    pol.set_from_flat(flat);
    const auto heads = policy_forward(pol, obs);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += logprob_from_u(heads.mu(i), heads.logstd(i), u(i), pol.width());
    return s;
  };
  auto grad = [&](const Eigen::VectorXd& flat) {
    Policy pol = p;
    pol.set_from_flat(flat);
    const auto heads = policy_forward(pol, obs);
    Eigen::VectorXd d_mu(n), d_ls(n);
    for (int i = 0; i < n; ++i) {
      const double sigma = std::exp(heads.logstd(i));
      const double z = (u(i) - heads.mu(i)) / sigma;
      d_mu(i) = z / sigma;
      d_ls(i) = (z * z - 1.0);
    }
    return policy_backward(pol, heads, d_mu, d_ls);
  };
  Rng probe_rng(13);
  const auto report = grad_check(loss, grad, p.flatten(), 100, 1e-5, probe_rng);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("entropy closed forms and monotonicity") {
  Rng rng(14);
  Policy p = Policy::make(3, 8, -1.0, 1.0, 0.0, 0.0, rng);
  // zero heads except bias, so logstd is the bias value
  p.w_logstd.setZero();
  p.w_mean.setZero();
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(3);

  p.b_logstd = 0.0;  // sigma = 1
  CHECK(policy_entropy(p, obs) == doctest::Approx(1.4189385332046727).epsilon(1e-12));
  const double e1 = policy_entropy(p, obs);
  p.b_logstd = std::log(2.0);  // sigma = 2
  CHECK(policy_entropy(p, obs) - e1 == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  double prev = -1e9;
  for (double ls = -3.0; ls <= 1.0; ls += 0.25) {
    p.b_logstd = ls;
    const double e = policy_entropy(p, obs);
    CHECK(e > prev);
    prev = e;
  }
}

TEST_CASE("adam: zero gradients are a parameter no-op") {
  AdamState opt = AdamState::make(4);
  Eigen::VectorXd params = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd before = params;
  CHECK(adam_step(opt, params, Eigen::VectorXd::Zero(4), 0.1));
  CHECK(params == before);
  CHECK(opt.step == 1);
}

TEST_CASE("adam first step moves by about -lr") {
  AdamState opt = AdamState::make(1);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd g = Eigen::VectorXd::Ones(1);
  adam_step(opt, params, g, 0.1);
  CHECK(params(0) == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam coordinates update independently") {
  AdamState opt = AdamState::make(2);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 1.0, 0.0;
  adam_step(opt, params, g, 0.1);
  CHECK(params(0) != 0.0);
  CHECK(params(1) == 0.0);
}

TEST_CASE("adam skips non-finite gradients") {
  AdamState opt = AdamState::make(2);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 1.0, std::nan("");
  CHECK_FALSE(adam_step(opt, params, g, 0.1));
  CHECK(params.cwiseAbs().maxCoeff() == 0.0);
  CHECK(opt.step == 0);
}

TEST_CASE("grad_check on a quadratic is near-exact") {
  Eigen::VectorXd theta = Eigen::VectorXd::Random(20);
  auto loss = [](const Eigen::VectorXd& t) { return 0.5 * t.squaredNorm(); };
  auto grad = [](const Eigen::VectorXd& t) { return Eigen::VectorXd(t); };
  Rng rng(15);
  const auto report = grad_check(loss, grad, theta, 50, 1e-5, rng);
  CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("grad_check contract errors") {
  Eigen::VectorXd theta = Eigen::VectorXd::Random(3);
  auto loss = [](const Eigen::VectorXd& t) { return t.sum(); };
  auto grad = [](const Eigen::VectorXd& t) { return Eigen::VectorXd::Ones(t.size()).eval(); };
  Rng rng(16);
  CHECK_THROWS_AS(grad_check(loss, grad, theta, 10, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(grad_check(loss, grad, theta, 0, 1e-5, rng), std::invalid_argument);
}
