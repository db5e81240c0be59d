#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fdadapt/core_model.hpp"
#include "fdadapt/pipeline.hpp"
#include "fdadapt/simulation.hpp"

namespace fdadapt {

/// Trapezoidal ∫ (f − g)² over the grid. Segments with an undefined (NaN)
/// end are dropped and the rest is rescaled to the full grid length.
double ise_1d(const Eigen::Ref<const Eigen::VectorXd>& f, const Eigen::Ref<const Eigen::VectorXd>& g,
              std::span<const double> grid);

/// Two-dimensional analogue over grid_s x grid_t; cells with an undefined
/// corner are dropped and the rest is rescaled to the full area.
double ise_2d(const Eigen::Ref<const Eigen::MatrixXd>& f, const Eigen::Ref<const Eigen::MatrixXd>& g,
              std::span<const double> grid_s, std::span<const double> grid_t);

/// Column means of the latent paths (rows are curves).
Eigen::VectorXd empirical_mean_tilde(const Eigen::Ref<const Eigen::MatrixXd>& paths);

/// Unbiased (divisor N − 1) covariance of the latent paths on the grid.
Eigen::MatrixXd empirical_cov_tilde(const Eigen::Ref<const Eigen::MatrixXd>& paths);

/// Linear-interpolation quantile (type 7) of unsorted values.
double quantile(std::vector<double> values, double q);

struct ExperimentSize {
  std::size_t N = 100;
  int m = 100;
};

struct ExperimentConfig {
  ProcessSpec process = ProcessSpec::fou(1.0, 1.0);
  NoiseSpec noise = NoiseSpec::homoscedastic(0.05);
  DesignKind design = DesignKind::IndependentUniform;
  double p_jitter = 0.2;
  std::vector<ExperimentSize> sizes{{40, 40}, {100, 100}, {200, 200}};
  std::size_t replications = 10;
  std::uint64_t seed = 1;
  std::size_t grid_points = 101;
  bool estimate_covariance = false;
  PipelineOptions pipeline;
  /// Replications run in parallel; each replication is single-threaded.
  std::size_t workers = 1;
};

struct ReplicationResult {
  std::size_t config_id = 0;
  std::size_t N = 0;
  int m = 0;
  double p = 0.0;
  std::size_t rep = 0;
  double ise_mean_tilde = 0.0;
  double ise_mean_true = 0.0;
  double ise_cov_tilde = 0.0;  // NaN when the covariance is not estimated
  double ise_cov_true = 0.0;
  bool failed = false;
  std::string error;
};

struct Quartiles {
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

struct ConfigSummary {
  std::size_t config_id = 0;
  std::size_t N = 0;
  int m = 0;
  double p = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  Quartiles mean_tilde;
  Quartiles mean_true;
  Quartiles cov_tilde;
  Quartiles cov_true;
};

struct RateSlope {
  double slope = 0.0;
  double se = 0.0;  // NaN with fewer than three configurations
};

/// Least-squares slope of log y on log x.
RateSlope fit_rate_slope(std::span<const double> x, std::span<const double> y);

struct ExperimentReport {
  std::vector<ReplicationResult> rows;
  std::vector<ConfigSummary> summaries;
  RateSlope slope_mean_tilde;
  RateSlope slope_mean_true;
  RateSlope slope_cov_tilde;
  RateSlope slope_cov_true;
};

/// Seed of replication `rep` of configuration `config_id`.
std::uint64_t replication_seed(std::uint64_t seed, std::size_t config_id, std::size_t rep);

/// One replication: simulate, estimate, and compare with μ̃, μ, Γ̃, Γ.
ReplicationResult run_replication(const ExperimentConfig& config, std::size_t config_id, std::size_t rep);

/// Runs every configuration. Failed replications are excluded from the
/// quantiles when they are fewer than 5% of a configuration's runs;
/// otherwise ExperimentError is thrown.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_replications_csv(std::ostream& out, const ExperimentReport& report);
void write_summary_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace fdadapt
