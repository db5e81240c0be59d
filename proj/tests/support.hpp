#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fdadapt/core_model.hpp"
#include "fdadapt/kernel.hpp"

namespace testing {

inline fdadapt::CurveObservations make_curve(std::int64_t id, std::vector<double> t, std::vector<double> y) {
  return fdadapt::CurveObservations(id, std::move(t), std::move(y));
}

inline std::vector<double> sorted_uniform(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.001, 0.999);
  std::vector<double> t(n);
  for (;;) {
    for (auto& v : t) v = u(rng);
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) == t.end()) return t;
  }
}

inline fdadapt::CurveObservations random_curve(std::mt19937_64& rng, std::int64_t id, std::size_t n) {
  std::normal_distribution<double> z;
  auto t = sorted_uniform(rng, n);
  std::vector<double> y(n);
  for (auto& v : y) v = z(rng);
  return make_curve(id, std::move(t), std::move(y));
}

/// Local polynomial weights of the d-th derivative at t by weighted least
/// squares in the raw basis (T - t)^k; returns the weights of every point of
/// `times` (zero outside the window).
inline Eigen::VectorXd dense_lp_oracle(const std::vector<double>& times, double t, double h, int order, int d,
                                       fdadapt::Kernel kernel) {
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd X(n, order + 1);
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = times[static_cast<std::size_t>(i)] - t;
    for (int p = 0; p <= order; ++p) X(i, p) = std::pow(x, p);
    k[i] = kernel(x / h);
  }
  const Eigen::MatrixXd A = X.transpose() * k.asDiagonal() * X;
  const Eigen::MatrixXd B = X.transpose() * k.asDiagonal();
  const Eigen::MatrixXd S = A.fullPivLu().solve(B);
  double fact = 1.0;
  for (int p = 2; p <= d; ++p) fact *= p;
  return fact * S.row(d).transpose();
}

struct OracleFit {
  bool included = false;
  double value = 0.0;
  double c = 0.0;    // Σ|W|
  double c_a = 0.0;  // Σ|W| |(T - t)/h|^a
  double max_w = 0.0;
};

/// Per-curve fit from the dense oracle: included when at least k0 times lie
/// in [t - h, t + h] and the weighted design has full rank.
inline OracleFit oracle_fit(const fdadapt::CurveObservations& curve, double t, double h, int order,
                            fdadapt::Kernel kernel, int k0, double a) {
  OracleFit f;
  std::vector<double> times(curve.times().begin(), curve.times().end());
  std::vector<double> inside_t, inside_y;
  for (std::size_t m = 0; m < times.size(); ++m) {
    if (t - h <= times[m] && times[m] <= t + h) {
      inside_t.push_back(times[m]);
      inside_y.push_back(curve.values()[m]);
    }
  }
  if (inside_t.size() < static_cast<std::size_t>(k0)) return f;
  std::size_t positive = 0;
  for (double x : inside_t) positive += kernel((x - t) / h) > 0.0;
  if (positive < static_cast<std::size_t>(order + 1)) return f;
  const auto w = dense_lp_oracle(inside_t, t, h, order, 0, kernel);
  f.included = true;
  for (std::size_t m = 0; m < inside_t.size(); ++m) {
    const double wm = w[static_cast<Eigen::Index>(m)];
    f.value += wm * inside_y[m];
    f.c += std::abs(wm);
    f.c_a += std::abs(wm) * std::pow(std::abs(inside_t[m] - t) / h, a);
    f.max_w = std::max(f.max_w, std::abs(wm));
  }
  return f;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

/// Mean risk summed term by term from oracle fits.
inline double oracle_mean_risk(const fdadapt::FunctionalDataset& data, double t, double h, double alpha, double L2,
                               double sigma2, double var_x, fdadapt::Kernel kernel, int k0) {
  const int order = std::min(static_cast<int>(std::floor(alpha)), 4);
  double W = 0.0, inv = 0.0, cprod = 0.0;
  for (const auto& c : data.curves()) {
    const auto f = oracle_fit(c, t, h, order, kernel, std::max(k0, order + 1), 2.0 * alpha);
    if (!f.included) continue;
    W += 1.0;
    inv += f.c * f.max_w;
    cprod += f.c * f.c_a;
  }
  if (W == 0.0) return std::numeric_limits<double>::infinity();
  const double fact = factorial(order);
  const double bias = (cprod / W) * L2 / (fact * fact) * std::pow(h, 2.0 * alpha);
  const double variance = sigma2 * inv / (W * W);
  const double dropout = var_x * (1.0 / W - 1.0 / static_cast<double>(data.size()));
  return bias + variance + dropout;
}

/// Covariance risk (both conditional terms) from oracle fits.
inline double oracle_cov_risk(const fdadapt::FunctionalDataset& data, double s, double t, double h, double alpha_s,
                              double L2_s, double alpha_t, double L2_t, double sigma2, double m2_s, double m2_t,
                              double var_prod, fdadapt::Kernel kernel, int k0) {
  if (!(h < 0.5 * std::abs(t - s))) return std::numeric_limits<double>::infinity();
  const int os = std::min(static_cast<int>(std::floor(alpha_s)), 4);
  const int ot = std::min(static_cast<int>(std::floor(alpha_t)), 4);
  double W = 0.0, inv_s = 0.0, inv_t = 0.0, cf_s = 0.0, cf_t = 0.0;
  for (const auto& c : data.curves()) {
    const auto fs = oracle_fit(c, s, h, os, kernel, std::max(k0, os + 1), 2.0 * alpha_s);
    const auto ft = oracle_fit(c, t, h, ot, kernel, std::max(k0, ot + 1), 2.0 * alpha_t);
    if (!(fs.included && ft.included)) continue;
    W += 1.0;
    inv_s += fs.c * fs.max_w;
    inv_t += ft.c * ft.max_w;
    cf_s += fs.c * fs.c_a;
    cf_t += ft.c * ft.c_a;
  }
  if (W == 0.0) return std::numeric_limits<double>::infinity();
  const double dropout = 0.5 * var_prod * (1.0 / W - 1.0 / static_cast<double>(data.size()));
  const double ft2 = factorial(ot) * factorial(ot), fs2 = factorial(os) * factorial(os);
  const double t_given_s = 2.0 * m2_s * (cf_t / W) * L2_t / ft2 * std::pow(h, 2.0 * alpha_t) +
                           sigma2 * m2_s * inv_t / (W * W) + dropout;
  const double s_given_t = 2.0 * m2_t * (cf_s / W) * L2_s / fs2 * std::pow(h, 2.0 * alpha_s) +
                           sigma2 * m2_t * inv_s / (W * W) + dropout;
  return t_given_s + s_given_t;
}

}  // namespace testing
