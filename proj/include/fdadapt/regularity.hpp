#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fdadapt/core_model.hpp"
#include "fdadapt/kernel.hpp"

namespace fdadapt {

/// How the presmoothing bandwidth is derived from Δ* and m̂.
enum class PresmoothRule {
  /// (Δ*/2) · (Δ*/(2 m̂))^{1/3}: the cube-root rule expressed in units of
  /// the anchor window [t1, t3].
  WindowScaled,
  /// (Δ*/(2 m̂))^{1/3} on the unit interval.
  Literal,
};

struct ScheduleOptions {
  double gamma = 0.5;
  double gamma_exponent = 2.0;
  int delta_max = 2;
  PresmoothRule presmooth_rule = PresmoothRule::WindowScaled;
  std::optional<double> presmooth_bandwidth;
  Kernel presmooth_kernel = epanechnikov_kernel;
};

/// Tuning schedule of the regularity estimator, all driven by m̂.
struct RegularitySchedule {
  double m_hat = 0.0;
  double gamma = 0.5;
  double gamma_exponent = 2.0;
  int delta_max = 2;
  double delta_star = 0.0;           // 2 exp(-log^gamma m̂)
  double phi = 0.0;                  // log^{-gamma_exponent} m̂
  double presmooth_bandwidth = 0.0;  // see PresmoothRule
  Kernel presmooth_kernel = epanechnikov_kernel;

  /// Half-width of the anchor window, t3 - t2 = t2 - t1 = Δ*/4.
  double half_window() const noexcept { return delta_star / 4.0; }
};

RegularitySchedule make_schedule(double m_hat, const ScheduleOptions& options = {});

struct ThetaEstimate {
  double value = 0.0;
  std::size_t retained = 0;
};

struct RegularityEstimate {
  double anchor_t2 = 0.0;
  double t1 = 0.0;
  double t3 = 0.0;
  std::vector<double> H_hat;  // Ĥ_d for d = 0..delta_hat
  int delta_hat = 0;
  double alpha_hat = 0.0;
  double L2_hat = 0.0;
  // θ̂ at d = delta_hat.
  double theta_12 = 0.0;
  double theta_13 = 0.0;
  double theta_23 = 0.0;
  // Per-d θ̂ values, index d.
  std::vector<double> theta_12_by_d;
  std::vector<double> theta_13_by_d;
  std::vector<double> theta_23_by_d;
  std::size_t retained_curves = 0;
};

/// Presmoothed value (d = 0, Nadaraya–Watson) or d-th derivative (order
/// d + 1 local polynomial) of one curve at t; NaN when undefined.
double presmoothed_derivative(const CurveObservations& curve, double t, int d, double bandwidth, Kernel kernel);

/// Mean over curves of squared differences of presmoothed d-th derivatives
/// at s and t. Curves undefined at either point are skipped.
ThetaEstimate estimate_theta(const FunctionalDataset& dataset, int d, double s, double t,
                             const RegularitySchedule& schedule);
ThetaEstimate estimate_theta(const FunctionalDataset& dataset, int d, double s, double t,
                             const RegularitySchedule& schedule, Kernel kernel);

/// Unclipped log-ratio (log θ13 - log θ12) / (2 log 2).
double estimate_H_raw(double theta_13, double theta_12);

inline constexpr double H_lower_clip = 0.05;
inline constexpr double H_upper_clip = 1.0;

/// estimate_H_raw clipped to [0.05, 1].
double estimate_H(double theta_13, double theta_12);

/// δ̂ = min{d : Ĥ_d < 1 - φ}, or delta_max when no listed d qualifies.
int select_delta(std::span<const double> H_by_d, double phi, int delta_max);

/// ½ (θ23 / |t3-t2|^{2(α-δ)} + θ12 / |t2-t1|^{2(α-δ)}).
double estimate_L2(double theta_23, double theta_12, double t1, double t2, double t3, double alpha_hat,
                   int delta_hat);

RegularityEstimate estimate_regularity(const FunctionalDataset& dataset, double anchor_t2,
                                       const RegularitySchedule& schedule);

/// Anchor points spread uniformly over [lo, hi], pulled inwards where needed
/// so every [t2 - Δ*/4, t2 + Δ*/4] stays inside (0,1).
std::vector<double> regularity_anchors(std::size_t count, const RegularitySchedule& schedule, double lo = 0.05,
                                       double hi = 0.95);

std::vector<RegularityEstimate> estimate_regularity_anchors(const FunctionalDataset& dataset,
                                                            std::span<const double> anchors,
                                                            const RegularitySchedule& schedule,
                                                            std::size_t workers = 1);

/// The anchor whose t2 is closest to t (ties go to the earlier anchor).
const RegularityEstimate& nearest_anchor(std::span<const RegularityEstimate> anchors, double t);

enum class NoiseMode { Constant, TimeVarying };

struct NoiseEstimate {
  std::vector<double> grid;
  Eigen::VectorXd sigma2_grid;
  double sigma2_max = 0.0;
  int K0 = 2;
  NoiseMode mode = NoiseMode::TimeVarying;
};

/// K0 = ⌊m̂ exp(-(log log m̂)²)⌋, at least 2.
int noise_neighbourhood_size(double m_hat);

/// Difference-based estimate of the error variance. Constant mode uses all
/// consecutive differences of every curve; TimeVarying uses, per grid point,
/// the K0 differences whose right-hand time is nearest to the point.
NoiseEstimate estimate_noise(const FunctionalDataset& dataset, const EvalGrid& grid, NoiseMode mode,
                             std::optional<int> K0_override = std::nullopt);

}  // namespace fdadapt
