#include "lppo/sysid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lppo/textio.hpp"

namespace lppo::sysid {

FeatureLibrary FeatureLibrary::make(int degree, bool include_control,
                                    const std::vector<std::string>& state_names,
                                    const std::vector<std::string>& control_names) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("feature library degree must be 1 or 2");
  FeatureLibrary lib;
  lib.degree = degree;
  lib.include_control = include_control;
  lib.column_names.push_back("1");
  for (const auto& n : state_names) lib.column_names.push_back(n);
  if (degree == 2) {
    for (size_t i = 0; i < state_names.size(); ++i)
      for (size_t j = i; j < state_names.size(); ++j)
        lib.column_names.push_back(state_names[i] + "*" + state_names[j]);
  }
  if (include_control)
    for (const auto& n : control_names) lib.column_names.push_back(n);
  return lib;
}

SysIdTrajectory subsample(const SysIdTrajectory& trajectory, int factor) {
  if (factor < 1) throw std::invalid_argument("subsample: factor must be >= 1");
  const auto n = trajectory.states.rows();
  if (n == 0) throw std::invalid_argument("subsample: empty trajectory");
  const auto kept = (n + factor - 1) / factor;
  SysIdTrajectory out;
  out.states.resize(kept, trajectory.states.cols());
  out.controls.resize(kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    out.states.row(i) = trajectory.states.row(i * factor);
    out.controls(i) = trajectory.controls(i * factor);
  }
  return out;
}

SysIdDataset build_dataset(const std::vector<SysIdTrajectory>& trajectories) {
  Eigen::Index total = 0;
  for (const auto& t : trajectories)
    if (t.states.rows() >= 2) total += t.states.rows() - 1;
  if (total == 0) throw std::invalid_argument("build_dataset: no transition pairs");

  const auto d_x = trajectories.front().states.cols();
  SysIdDataset ds;
  ds.snapshots.resize(total, d_x);
  ds.targets.resize(total, d_x);
  ds.controls.resize(total, 1);
  ds.trajectory_of_row.reserve(total);

  Eigen::Index row = 0;
  for (size_t k = 0; k < trajectories.size(); ++k) {
    const auto& t = trajectories[k];
    for (Eigen::Index i = 0; i + 1 < t.states.rows(); ++i) {
      ds.snapshots.row(row) = t.states.row(i);
      ds.targets.row(row) = t.states.row(i + 1);
      ds.controls(row, 0) = t.controls(i);
      ds.trajectory_of_row.push_back(static_cast<int>(k));
      ++row;
    }
  }
  return ds;
}

Eigen::RowVectorXd feature_row(const FeatureLibrary& library, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& a) {
  Eigen::RowVectorXd row(library.feature_count());
  Eigen::Index c = 0;
  row(c++) = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) row(c++) = x(i);
  if (library.degree == 2) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index j = i; j < x.size(); ++j) row(c++) = x(i) * x(j);
  }
  if (library.include_control)
    for (Eigen::Index i = 0; i < a.size(); ++i) row(c++) = a(i);
  if (c != row.size()) throw std::invalid_argument("feature_row: dimension mismatch");
  return row;
}

Eigen::MatrixXd build_library(const SysIdDataset& dataset, const FeatureLibrary& library) {
  const auto n = dataset.snapshots.rows();
  if (n == 0) throw std::invalid_argument("build_library: empty dataset");
  if (dataset.targets.rows() != n || dataset.controls.rows() != n)
    throw std::invalid_argument("build_library: dataset row counts differ");

  Eigen::MatrixXd theta(n, library.feature_count());
  for (Eigen::Index i = 0; i < n; ++i) {
    theta.row(i) =
        feature_row(library, dataset.snapshots.row(i), dataset.controls.row(i).transpose());
  }
  for (Eigen::Index i = 0; i < theta.rows(); ++i)
    for (Eigen::Index j = 0; j < theta.cols(); ++j)
      if (!std::isfinite(theta(i, j)))
        throw std::runtime_error("build_library: non-finite feature at row " +
                                 fmt_int(i) + ", column " + library.column_names[j]);
  return theta;
}

StlsqResult stlsq(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& targets,
                  double threshold, int max_iters) {
  if (theta.rows() < theta.cols())
    throw std::invalid_argument("stlsq: need at least as many rows as features");
  if (threshold < 0) throw std::invalid_argument("stlsq: threshold must be >= 0");
  if (max_iters < 1) throw std::invalid_argument("stlsq: max_iters must be >= 1");
  if (targets.rows() != theta.rows())
    throw std::invalid_argument("stlsq: target rows mismatch");

  const auto n_feat = theta.cols();
  StlsqResult result;
  result.coeffs = Eigen::MatrixXd::Zero(n_feat, targets.cols());

  for (Eigen::Index col = 0; col < targets.cols(); ++col) {
    std::vector<Eigen::Index> support(n_feat);
    for (Eigen::Index i = 0; i < n_feat; ++i) support[i] = i;

    auto solve_on = [&](const std::vector<Eigen::Index>& sup) {
      Eigen::MatrixXd sub(theta.rows(), static_cast<Eigen::Index>(sup.size()));
      for (size_t j = 0; j < sup.size(); ++j) sub.col(j) = theta.col(sup[j]);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sub);
      if (cod.rank() < sub.cols()) result.rank_deficient = true;  // min-norm solution
      return Eigen::VectorXd(cod.solve(targets.col(col)));
    };

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(n_feat);
    bool converged = false;
    for (int iter = 0; iter < max_iters && !support.empty(); ++iter) {
      Eigen::VectorXd sol = solve_on(support);
      std::vector<Eigen::Index> keep;
      for (size_t j = 0; j < support.size(); ++j)
        if (threshold == 0.0 || std::fabs(sol(j)) >= threshold) keep.push_back(support[j]);
      if (keep.size() == support.size()) {  // support stable
        for (size_t j = 0; j < support.size(); ++j) coef(support[j]) = sol(j);
        converged = true;
        break;
      }
      support = std::move(keep);
    }
    if (!converged && !support.empty()) {
      // iteration budget exhausted: final solve with a hard prune so the
      // sparsity invariant holds regardless
      Eigen::VectorXd sol = solve_on(support);
      for (size_t j = 0; j < support.size(); ++j)
        coef(support[j]) = std::fabs(sol(j)) >= threshold ? sol(j) : 0.0;
    }
    result.coeffs.col(col) = coef;
  }
  return result;
}

static void zscore_columns(const Eigen::MatrixXd& m, Eigen::VectorXd& mean,
                           Eigen::VectorXd& scale, bool skip_first) {
  mean = m.colwise().mean();
  scale.resize(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - mean(j)).square().mean();
    scale(j) = std::sqrt(var);
    if (scale(j) < 1e-12) scale(j) = 1.0;
  }
  if (skip_first && m.cols() > 0) {
    mean(0) = 0.0;
    scale(0) = 1.0;
  }
}

std::pair<RomModel, FitReport> identify_rom(const std::vector<SysIdTrajectory>& trajectories,
                                            const FeatureLibrary& library,
                                            const IdentifyOptions& options,
                                            const std::vector<std::string>& state_names) {
  if (trajectories.size() < 2)
    throw std::invalid_argument("identify_rom: need at least 2 trajectories");

  std::vector<SysIdTrajectory> sub;
  sub.reserve(trajectories.size());
  for (const auto& t : trajectories) sub.push_back(subsample(t, options.subsample_factor));

  size_t n_holdout = static_cast<size_t>(std::llround(sub.size() * options.holdout_fraction));
  if (options.holdout_fraction > 0 && n_holdout == 0) n_holdout = 1;
  if (n_holdout >= sub.size()) n_holdout = sub.size() - 1;
  const size_t n_train = sub.size() - n_holdout;

  std::vector<SysIdTrajectory> train(sub.begin(), sub.begin() + n_train);
  std::vector<SysIdTrajectory> holdout(sub.begin() + n_train, sub.end());

  SysIdDataset ds = build_dataset(train);
  Eigen::MatrixXd theta = build_library(ds, library);

  RomModel rom;
  rom.library = library;
  rom.state_names = state_names;
  rom.dt_rom = options.dt_record * options.subsample_factor;
  rom.sparsity_threshold = options.threshold;

  zscore_columns(theta, rom.feature_mean, rom.feature_scale, /*skip_first=*/true);
  zscore_columns(ds.targets, rom.target_mean, rom.target_scale, /*skip_first=*/false);

  Eigen::MatrixXd theta_s = theta;
  for (Eigen::Index j = 0; j < theta.cols(); ++j)
    theta_s.col(j) = (theta.col(j).array() - rom.feature_mean(j)) / rom.feature_scale(j);
  Eigen::MatrixXd targets_s = ds.targets;
  for (Eigen::Index j = 0; j < targets_s.cols(); ++j)
    targets_s.col(j) =
        (ds.targets.col(j).array() - rom.target_mean(j)) / rom.target_scale(j);

  StlsqResult fit = stlsq(theta_s, targets_s, options.threshold, options.max_iters);
  rom.coeffs = fit.coeffs;

  FitReport report;
  report.rank_deficient = fit.rank_deficient;
  report.train_samples = static_cast<int>(theta.rows());
  report.holdout_trajectories = static_cast<int>(holdout.size());

  const int d_x = static_cast<int>(state_names.size());
  report.one_step_r2.assign(d_x, 1.0);
  report.rollout_rmse.assign(d_x, 0.0);

  SysIdDataset hds = build_dataset(holdout);
  Eigen::MatrixXd pred(hds.snapshots.rows(), d_x);
  for (Eigen::Index i = 0; i < hds.snapshots.rows(); ++i)
    pred.row(i) = rom_step(rom, hds.snapshots.row(i), hds.controls.row(i).transpose());
  for (int s = 0; s < d_x; ++s) {
    const double sse = (pred.col(s) - hds.targets.col(s)).squaredNorm();
    const double mean = hds.targets.col(s).mean();
    const double sst = (hds.targets.col(s).array() - mean).square().sum();
    report.one_step_r2[s] = 1.0 - sse / std::max(sst, 1e-12);
    if (report.one_step_r2[s] < 0) report.negative_r2 = true;
  }

  Eigen::VectorXd sq_sum = Eigen::VectorXd::Zero(d_x);
  Eigen::Index n_roll = 0;
  for (const auto& t : holdout) {
    Eigen::VectorXd x = t.states.row(0);
    for (Eigen::Index i = 0; i + 1 < t.states.rows(); ++i) {
      Eigen::VectorXd a(1);
      a(0) = t.controls(i);
      x = rom_step(rom, x, a);
      sq_sum += (x - t.states.row(i + 1).transpose()).array().square().matrix();
      ++n_roll;
    }
  }
  if (n_roll > 0)
    for (int s = 0; s < d_x; ++s) report.rollout_rmse[s] = std::sqrt(sq_sum(s) / n_roll);

  return {rom, report};
}

Eigen::VectorXd rom_step(const RomModel& rom, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& a) {
  if (x.size() != rom.state_dim())
    throw std::invalid_argument("rom_step: state dimension mismatch");
  Eigen::RowVectorXd f = feature_row(rom.library, x, a);
  Eigen::RowVectorXd fs =
      (f.array() - rom.feature_mean.transpose().array()) / rom.feature_scale.transpose().array();
  Eigen::VectorXd ys = (fs * rom.coeffs).transpose();
  Eigen::VectorXd y = rom.target_mean.array() + rom.target_scale.array() * ys.array();
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!std::isfinite(y(i)))
      throw std::runtime_error("rom_step: non-finite prediction for state " +
                               rom.state_names[i]);
  return y;
}

Eigen::MatrixXd RomModel::raw_coefficients() const {
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(coeffs.rows(), coeffs.cols());
  for (Eigen::Index s = 0; s < coeffs.cols(); ++s) {
    double constant = target_mean(s) + target_scale(s) * coeffs(0, s);
    for (Eigen::Index f = 1; f < coeffs.rows(); ++f) {
      const double w = target_scale(s) * coeffs(f, s) / feature_scale(f);
      raw(f, s) = w;
      constant -= w * feature_mean(f);
    }
    raw(0, s) = constant;
  }
  return raw;
}

std::string FitReport::summary() const {
  std::ostringstream os;
  os << "train_samples=" << train_samples << " holdout_trajectories=" << holdout_trajectories
     << (rank_deficient ? " [warning: rank-deficient support]" : "")
     << (negative_r2 ? " [warning: negative holdout R2]" : "") << "\n";
  os << "state one_step_r2 rollout_rmse\n";
  for (size_t i = 0; i < one_step_r2.size(); ++i)
    os << i << " " << fmt_g17(one_step_r2[i]) << " " << fmt_g17(rollout_rmse[i]) << "\n";
  return os.str();
}

static void expect_tag(std::istream& in, const std::string& tag, const std::string& path) {
  std::string got;
  in >> got;
  if (got != tag)
    throw std::runtime_error("rom file " + path + ": expected '" + tag + "', got '" + got + "'");
}

std::string rom_to_text(const RomModel& rom) {
  std::ostringstream os;
  os << "romodel v1\n";
  os << "degree " << rom.library.degree << "\n";
  os << "include_control " << (rom.library.include_control ? 1 : 0) << "\n";
  os << "dt_rom " << fmt_g17(rom.dt_rom) << "\n";
  os << "sparsity_threshold " << fmt_g17(rom.sparsity_threshold) << "\n";
  os << "states " << rom.state_names.size();
  for (const auto& n : rom.state_names) os << " " << n;
  os << "\n";
  os << "features " << rom.library.column_names.size();
  for (const auto& n : rom.library.column_names) os << " " << n;
  os << "\n";
  auto vec = [&os](const char* tag, const Eigen::VectorXd& v) {
    os << tag;
    for (Eigen::Index i = 0; i < v.size(); ++i) os << " " << fmt_g17(v(i));
    os << "\n";
  };
  vec("feature_mean", rom.feature_mean);
  vec("feature_scale", rom.feature_scale);
  vec("target_mean", rom.target_mean);
  vec("target_scale", rom.target_scale);
  os << "coeffs " << rom.coeffs.rows() << " " << rom.coeffs.cols() << "\n";
  for (Eigen::Index i = 0; i < rom.coeffs.rows(); ++i) {
    for (Eigen::Index j = 0; j < rom.coeffs.cols(); ++j)
      os << (j ? " " : "") << fmt_g17(rom.coeffs(i, j));
    os << "\n";
  }
  return os.str();
}

void save_rom(const std::string& path, const RomModel& rom) {
  write_file(path, rom_to_text(rom));
}

RomModel rom_from_text(const std::string& text, const std::string& path) {
  std::istringstream in(text);
  RomModel rom;
  expect_tag(in, "romodel", path);
  expect_tag(in, "v1", path);
  int degree = 0, include_control = 0;
  expect_tag(in, "degree", path);
  in >> degree;
  expect_tag(in, "include_control", path);
  in >> include_control;
  expect_tag(in, "dt_rom", path);
  in >> rom.dt_rom;
  expect_tag(in, "sparsity_threshold", path);
  in >> rom.sparsity_threshold;

  size_t n_states = 0, n_features = 0;
  expect_tag(in, "states", path);
  in >> n_states;
  rom.state_names.resize(n_states);
  for (auto& n : rom.state_names) in >> n;
  expect_tag(in, "features", path);
  in >> n_features;
  std::vector<std::string> feature_names(n_features);
  for (auto& n : feature_names) in >> n;

  auto vec = [&](const char* tag, Eigen::VectorXd& v, size_t n) {
    expect_tag(in, tag, path);
    v.resize(n);
    for (size_t i = 0; i < n; ++i) in >> v(i);
  };
  vec("feature_mean", rom.feature_mean, n_features);
  vec("feature_scale", rom.feature_scale, n_features);
  vec("target_mean", rom.target_mean, n_states);
  vec("target_scale", rom.target_scale, n_states);

  Eigen::Index rows = 0, cols = 0;
  expect_tag(in, "coeffs", path);
  in >> rows >> cols;
  if (rows != static_cast<Eigen::Index>(n_features) ||
      cols != static_cast<Eigen::Index>(n_states))
    throw std::runtime_error("rom file " + path + ": coefficient shape mismatch");
  rom.coeffs.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) in >> rom.coeffs(i, j);
  if (!in) throw std::runtime_error("rom file " + path + ": truncated");

  rom.library.degree = degree;
  rom.library.include_control = include_control != 0;
  rom.library.column_names = feature_names;
  return rom;
}

RomModel load_rom(const std::string& path) {
  return rom_from_text(read_file(path), path);
}

}  // namespace lppo::sysid
