#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace lppo::sysid {

/// Polynomial feature library over (x, a): constant, then x terms of the
/// given degree (degree 2 adds the upper-triangular quadratic monomials),
/// then the control column(s) when include_control is set.
struct FeatureLibrary {
  int degree = 1;  // 1 or 2
  bool include_control = true;
  std::vector<std::string> column_names;

  static FeatureLibrary make(int degree, bool include_control,
                             const std::vector<std::string>& state_names,
                             const std::vector<std::string>& control_names);
  int feature_count() const { return static_cast<int>(column_names.size()); }
};

/// Paired one-step snapshots assembled from trajectories. Pairs never
/// straddle a trajectory boundary.
struct SysIdDataset {
  Eigen::MatrixXd snapshots;  // x_t, one row per sample
  Eigen::MatrixXd targets;    // x_{t+1}
  Eigen::MatrixXd controls;   // a_t
  std::vector<int> trajectory_of_row;
};

/// Discrete-time ROM x_{t+1} = unscale(Xi^T * scale(features(x_t, a_t))).
/// Coefficients are stored in z-scored feature/target space so the
/// sparsity threshold applies uniformly; normalization constants make
/// the model self-contained.
struct RomModel {
  Eigen::MatrixXd coeffs;  // n_features x d_x, scaled space
  FeatureLibrary library;
  double dt_rom = 25.0;
  std::vector<std::string> state_names;
  Eigen::VectorXd feature_mean, feature_scale;  // per feature column
  Eigen::VectorXd target_mean, target_scale;    // per state
  double sparsity_threshold = 0.0;

  int state_dim() const { return static_cast<int>(state_names.size()); }

  /// Equivalent raw-space coefficient matrix (n_features x d_x): row 0 is
  /// the constant term, remaining rows act on unscaled features.
  Eigen::MatrixXd raw_coefficients() const;
};

struct FitReport {
  std::vector<double> one_step_r2;       // per state, holdout
  std::vector<double> rollout_rmse;      // per state, holdout multi-step
  bool rank_deficient = false;
  bool negative_r2 = false;
  int train_samples = 0;
  int holdout_trajectories = 0;

  std::string summary() const;
};

/// A trajectory as used by identification: rows of states plus the
/// control held over each interval.
struct SysIdTrajectory {
  Eigen::MatrixXd states;    // n_rows x d_x
  Eigen::VectorXd controls;  // n_rows (control applied at each row time)
};

/// Keep rows 0, factor, 2*factor, ... Throws on an empty trajectory.
SysIdTrajectory subsample(const SysIdTrajectory& trajectory, int factor);

/// Assemble the one-step dataset from (already sub-sampled) trajectories.
SysIdDataset build_dataset(const std::vector<SysIdTrajectory>& trajectories);

/// Feature matrix Theta; row i = [1, x_i, (quadratic terms), a_i].
/// Throws std::runtime_error naming row/column on non-finite entries.
Eigen::MatrixXd build_library(const SysIdDataset& dataset, const FeatureLibrary& library);

Eigen::RowVectorXd feature_row(const FeatureLibrary& library, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& a);

struct StlsqResult {
  Eigen::MatrixXd coeffs;
  bool rank_deficient = false;
};

/// Sequential thresholded least squares, per target column.
StlsqResult stlsq(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& targets,
                  double threshold, int max_iters);

struct IdentifyOptions {
  int subsample_factor = 5;
  double threshold = 0.02;
  double holdout_fraction = 0.1;
  int max_iters = 20;
  double dt_record = 5.0;
};

/// Full pipeline: subsample -> dataset -> z-score -> stlsq; fit report
/// from held-out trajectories (last fraction by generation order).
std::pair<RomModel, FitReport> identify_rom(const std::vector<SysIdTrajectory>& trajectories,
                                            const FeatureLibrary& library,
                                            const IdentifyOptions& options,
                                            const std::vector<std::string>& state_names);

/// One ROM step; throws std::runtime_error if the output is non-finite.
Eigen::VectorXd rom_step(const RomModel& rom, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& a);

std::string rom_to_text(const RomModel& rom);
RomModel rom_from_text(const std::string& text, const std::string& origin);

void save_rom(const std::string& path, const RomModel& rom);
RomModel load_rom(const std::string& path);

}  // namespace lppo::sysid
