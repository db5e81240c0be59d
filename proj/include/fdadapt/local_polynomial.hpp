#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "fdadapt/core_model.hpp"
#include "fdadapt/kernel.hpp"

namespace fdadapt {

inline constexpr int max_lp_order = 4;
inline constexpr double lp_singularity_threshold = 1e-12;

/// Local polynomial weights of one curve at one target point.
///
/// The weights cover the contiguous block of observations with
/// |T_m - t| <= h, starting at index `first`; every other observation has
/// weight zero. A degenerate fit carries no weights.
struct LpWeights {
  double target_t = 0.0;
  double bandwidth = 0.0;
  int order = 0;
  int derivative = 0;
  std::size_t first = 0;
  std::size_t window_count = 0;
  bool degenerate = true;
  Eigen::VectorXd weights;

  /// Σ_m W_m y_m over the window.
  double apply(std::span<const double> values) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) acc += weights[k] * values[first + k];
    return acc;
  }

  double abs_sum() const { return weights.cwiseAbs().sum(); }
  double max_abs() const { return weights.size() ? weights.cwiseAbs().maxCoeff() : 0.0; }

  /// Σ_m |(T_m - t)/h|^a |W_m|.
  double abs_moment_sum(std::span<const double> times, double a) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
      const double z = std::abs((times[first + k] - target_t) / bandwidth);
      acc += (a == 0.0 ? 1.0 : std::pow(z, a)) * std::abs(weights[k]);
    }
    return acc;
  }
};

/// Solves the local polynomial system for points already restricted to the
/// window. Returns false when the moment matrix is numerically singular.
///
/// The basis is U(z) = (1, z, ..., z^p / p!) with z = (T - t) / h, so the
/// k-th coefficient estimates h^k times the k-th derivative; the returned
/// weights are rescaled by h^-derivative.
template <typename Scalar>
bool solve_lp_system(std::span<const Scalar> window_times, Scalar t, Scalar h, int order, int derivative,
                     Kernel kernel, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const auto n = static_cast<Eigen::Index>(window_times.size());

  Vector k(n);
  for (Eigen::Index m = 0; m < n; ++m) k[m] = kernel((window_times[m] - t) / h);

  if (order == 0) {
    const Scalar total = k.sum();
    if (!(total > Scalar(0))) return false;
    weights = k / total;
    return true;
  }

  const Eigen::Index p = order + 1;
  Matrix basis(p, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const Scalar z = (window_times[m] - t) / h;
    Scalar term = Scalar(1);
    for (Eigen::Index j = 0; j < p; ++j) {
      basis(j, m) = term;
      term *= z / Scalar(j + 1);
    }
  }
  const Matrix moments = basis * k.asDiagonal() * basis.transpose();

  const Eigen::SelfAdjointEigenSolver<Matrix> spectrum(moments, Eigen::EigenvaluesOnly);
  const Scalar largest = spectrum.eigenvalues().maxCoeff();
  const Scalar smallest = spectrum.eigenvalues().minCoeff();
  if (!(largest > Scalar(0)) || smallest <= Scalar(lp_singularity_threshold) * largest) return false;

  Vector unit = Vector::Zero(p);
  unit[derivative] = Scalar(1);
  const Vector coef = moments.ldlt().solve(unit);
  weights = (basis.transpose() * coef).cwiseProduct(k);
  if (derivative > 0) weights /= std::pow(h, Scalar(derivative));
  return true;
}

/// LP weights of order `order` at `t`. Degenerate when fewer than `k0`
/// observation times fall in [t - h, t + h] or the moment matrix is singular.
/// `derivative` selects which derivative the weights estimate (0 = level).
LpWeights lp_weights(const CurveObservations& curve, double t, double h, int order, Kernel kernel, int k0,
                     int derivative = 0);

/// Nadaraya–Watson estimate at t, or NaN when the window holds no mass.
double nw_value(const CurveObservations& curve, double t, double h, Kernel kernel);

/// Nadaraya–Watson smoothing at every grid point; undefined points are NaN.
Eigen::VectorXd nw_presmooth(const CurveObservations& curve, std::span<const double> points, double h,
                             Kernel kernel);
Eigen::VectorXd nw_presmooth(const CurveObservations& curve, const EvalGrid& grid, double h, Kernel kernel);

}  // namespace fdadapt
