#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fdadapt/core_model.hpp"
#include "fdadapt/kernel.hpp"
#include "fdadapt/regularity.hpp"

namespace fdadapt {

/// Log-spaced bandwidth candidates.
struct BandwidthGrid {
  double h_min = 0.01;
  double h_max = 0.5;
  std::size_t count = 151;

  std::vector<double> points() const;

  /// [1/m̂, 0.5] with 151 points.
  static BandwidthGrid for_mean(double m_hat);
  /// [0.01, 0.1] with 41 points.
  static BandwidthGrid for_covariance();
};

/// Everything needed to evaluate the final local polynomial weights.
struct SmoothingPlan {
  Kernel kernel = biweight_kernel;
  int k0 = 2;
  /// Replace the data-driven C̄₁ by ∫|u|^{2α̂} K(u) du.
  bool kernel_moment_approx = false;
  /// Also minimise the risk over k0 ∈ {order+1, order+2, order+3}.
  bool optimize_k0 = false;
};

/// LP order ⌊α̂⌋, capped at the largest supported order.
int lp_order_for(double alpha_hat);

/// k0 raised to order + 1 when needed.
int effective_k0(int k0, int order);

/// Per-curve summary of one local polynomial fit.
struct CurveSmooth {
  bool included = false;  // w_i = 1
  double value = 0.0;     // X̂_t
  double abs_sum = 0.0;   // c_i
  double abs_moment = 0.0;  // c_i(·, α)
  double max_abs = 0.0;   // max_m |W_m|
};

CurveSmooth smooth_curve(const CurveObservations& curve, double t, double h, int order, Kernel kernel, int k0,
                         double alpha);

struct InclusionStats {
  double t = 0.0;
  double h = 0.0;
  int order = 0;
  int k0 = 2;
  double alpha = 0.0;  // exponent used for c_i(·, α)
  std::vector<unsigned char> w;
  std::size_t W_N = 0;
  // Per-curve values, zero for excluded curves.
  Eigen::VectorXd c;
  Eigen::VectorXd c_alpha;
  Eigen::VectorXd N_i;
  Eigen::VectorXd values;
  double N_mu = 0.0;
  double C_bar1 = 0.0;
};

/// Curve-inclusion counts and weight geometry at (t, h). A curve is included
/// when at least k0 of its times fall in [t - h, t + h] and its local
/// polynomial fit is non-degenerate.
InclusionStats inclusion_stats(const FunctionalDataset& dataset, double t, double h, int order, Kernel kernel,
                               int k0, double alpha);

struct MeanRiskTerms {
  double bias = 0.0;
  double variance = 0.0;
  double dropout = 0.0;
  double q1_sq = 0.0;
  double q2_sq = 0.0;
  double q3_sq = 0.0;

  double total() const noexcept { return bias + variance + dropout; }
};

/// q₁² h^{2α̂} + q₂² / 𝒩_μ + q₃² (1/𝒲_N − 1/N). The stats must have been
/// computed with exponent alpha = 2α̂. Every term is +inf when 𝒲_N = 0.
MeanRiskTerms mean_risk(const InclusionStats& stats, const RegularityEstimate& reg, const NoiseEstimate& noise,
                        double var_X_t, std::size_t N, const SmoothingPlan& plan = {});

struct RiskProfile {
  double t = 0.0;
  std::vector<double> bandwidths;
  Eigen::VectorXd term_bias;
  Eigen::VectorXd term_var;
  Eigen::VectorXd term_dropout;
  Eigen::VectorXd total;
  Eigen::VectorXd q1_sq;
  std::vector<std::size_t> W_N;
  double q2_sq = 0.0;
  double q3_sq = 0.0;
  double h_star = 0.0;
  std::size_t star_index = 0;
  int k0_star = 2;
};

/// Minimises the mean risk over the bandwidth grid; ties go to the smaller h.
RiskProfile select_mean_bandwidth(const FunctionalDataset& dataset, double t, const RegularityEstimate& reg,
                                  const NoiseEstimate& noise, double var_X_t, const BandwidthGrid& grid,
                                  const SmoothingPlan& plan = {});

/// Variance across curves of presmoothed values at t (curves undefined at t
/// are skipped). Zero when fewer than two curves are defined.
double presmoothed_variance(const FunctionalDataset& dataset, double t, const RegularitySchedule& schedule);

struct SmoothedMean {
  double value = 0.0;  // NaN when W_N = 0
  std::size_t W_N = 0;
};

/// μ̂_N(t; h): average of the included curves' local polynomial estimates.
SmoothedMean smoothed_mean(const FunctionalDataset& dataset, double t, double h, int order, Kernel kernel, int k0);

struct MeanOptions {
  SmoothingPlan plan;
  BandwidthGrid bandwidths;
  std::size_t workers = 1;
};

struct MeanEstimate {
  std::vector<double> grid;
  Eigen::VectorXd mu;  // NaN where undefined
  Eigen::VectorXd h_star;
  Eigen::VectorXd alpha;
  std::vector<std::size_t> W_N;
  Eigen::VectorXd risk_bias;
  Eigen::VectorXd risk_var;
  Eigen::VectorXd risk_dropout;
  std::vector<RiskProfile> anchor_profiles;

  /// Linear interpolation of μ̂ at t inside the grid range (NaN outside or
  /// next to an undefined value).
  double mu_at(double t) const;
};

/// Solves bandwidths at the regularity anchors, interpolates them linearly
/// onto the grid and evaluates μ̂* there.
MeanEstimate estimate_mean(const FunctionalDataset& dataset, const EvalGrid& grid,
                           std::span<const RegularityEstimate> anchors, const NoiseEstimate& noise,
                           const RegularitySchedule& schedule, const MeanOptions& options);

/// Piecewise-linear interpolation through (xs, ys), constant beyond the ends.
double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x);

}  // namespace fdadapt
