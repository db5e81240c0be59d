#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fdadapt/core_model.hpp"
#include "fdadapt/mean.hpp"
#include "fdadapt/regularity.hpp"

namespace fdadapt {

struct PairInclusionStats {
  double s = 0.0;
  double t = 0.0;
  double h = 0.0;
  std::vector<unsigned char> w_pair;
  std::size_t W_N_pair = 0;
  std::size_t W_N_s = 0;
  std::size_t W_N_t = 0;
  double N_Gamma_t_given_s = 0.0;
  double N_Gamma_s_given_t = 0.0;
  double C_frak_t_given_s = 0.0;
  double C_frak_s_given_t = 0.0;
  /// Σ w_i X̂_s X̂_t / W_N_pair (NaN when W_N_pair = 0).
  double gamma = 0.0;
};

/// Pair statistics from per-curve fits at s and at t (same curve order).
PairInclusionStats pair_inclusion_stats(std::span<const CurveSmooth> at_s, std::span<const CurveSmooth> at_t,
                                        double s, double t, double h);

/// Pair statistics computed from the data. alpha_s and alpha_t are the
/// exponents used for c_i(·, α), normally 2α̂_s and 2α̂_t.
PairInclusionStats pair_inclusion_stats(const FunctionalDataset& dataset, double s, double t, double h,
                                        int order_s, int order_t, Kernel kernel, int k0, double alpha_s,
                                        double alpha_t);

struct ConditionalRisk {
  double bias = 0.0;
  double variance = 0.0;
  double dropout = 0.0;

  double total() const noexcept { return bias + variance + dropout; }
};

struct CovarianceRiskTerms {
  ConditionalRisk t_given_s;
  ConditionalRisk s_given_t;

  double total() const noexcept { return t_given_s.total() + s_given_t.total(); }
};

/// ℛ_Γ(s|t; h) + ℛ_Γ(t|s; h). Infinite when W_N_pair = 0 or when
/// h ≥ |s − t| / 2.
CovarianceRiskTerms covariance_risk(const PairInclusionStats& pair, const RegularityEstimate& reg_s,
                                    const RegularityEstimate& reg_t, const NoiseEstimate& noise, double m2_s,
                                    double m2_t, double var_XsXt, std::size_t N, const SmoothingPlan& plan = {});

struct PairMoments {
  double m2_s = 0.0;
  double m2_t = 0.0;
  double var_product = 0.0;
};

/// E(X_s²), E(X_t²) and Var(X_s X_t) from presmoothed values of the curves
/// defined at both points.
PairMoments presmoothed_pair_moments(const FunctionalDataset& dataset, double s, double t,
                                     const RegularitySchedule& schedule);

struct DiagonalBand {
  double d = 0.0;
  double c = 0.0;
};

/// 𝔡 = (N⁻² Σ 1/M_i)^c with c = (2α̂ + 1/2) / (2α̂ + 1)².
DiagonalBand diagonal_band_width(const FunctionalDataset& dataset, double alpha_hat);

struct CovarianceOptions {
  SmoothingPlan plan;
  BandwidthGrid bandwidths = BandwidthGrid::for_covariance();
  std::size_t workers = 1;
  bool subtract_mean = true;
  bool psd_clip = false;
};

struct CovarianceSurface {
  std::vector<double> grid_s;
  std::vector<double> grid_t;
  Eigen::MatrixXd values;        // Γ̂*
  Eigen::MatrixXd gamma_values;  // γ̂
  Eigen::MatrixXd h_star;
  Eigen::MatrixX<bool> in_band;
  Eigen::MatrixX<bool> undefined_mask;
  Eigen::MatrixXi W_N_pair;
  double band_width_d = 0.0;
  double band_exponent_c = 0.0;
  /// Anchor lattice and its selected bandwidths (NaN where not solved).
  std::vector<double> anchors;
  Eigen::MatrixXd anchor_h;
  /// In-band points whose boundary midpoint had to be clamped.
  std::size_t clamped_points = 0;
};

/// Adaptive covariance surface. Bandwidths are selected on the off-band
/// pairs of the anchor lattice and interpolated bilinearly; in-band values
/// are copied from the band boundary point with the same midpoint.
CovarianceSurface estimate_covariance(const FunctionalDataset& dataset, const EvalGrid& grid_s,
                                      const EvalGrid& grid_t, std::span<const RegularityEstimate> anchors,
                                      const NoiseEstimate& noise, const RegularitySchedule& schedule,
                                      const MeanEstimate& mean_result, const CovarianceOptions& options);

/// ∬_{t−𝔡 ≤ s ≤ t} {Γ(u − 𝔡/2, u + 𝔡/2) − Γ(s, t)}² ds dt over the unit
/// square, u = (s+t)/2 clamped so the boundary point stays inside [0,1].
double diagonal_fill_error(const std::function<double(double, double)>& cov, double d);

}  // namespace fdadapt
