#include "fdadapt/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fdadapt/error.hpp"
#include "fdadapt/local_polynomial.hpp"
#include "fdadapt/parallel.hpp"

namespace fdadapt {

namespace {
constexpr double nan = std::numeric_limits<double>::quiet_NaN();
}

RegularitySchedule make_schedule(double m_hat, const ScheduleOptions& options) {
  if (!(m_hat > 1.0)) throw ConfigurationError("regularity schedule needs m_hat > 1");
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) throw ConfigurationError("gamma must lie in (0,1)");
  if (!(options.gamma_exponent > 0.0)) throw ConfigurationError("Gamma exponent must be positive");
  if (options.delta_max < 0 || options.delta_max + 1 > max_lp_order)
    throw ConfigurationError("delta_max must lie in [0, " + std::to_string(max_lp_order - 1) + "]");

  RegularitySchedule s;
  s.m_hat = m_hat;
  s.gamma = options.gamma;
  s.gamma_exponent = options.gamma_exponent;
  s.delta_max = options.delta_max;
  s.presmooth_kernel = options.presmooth_kernel;
  const double log_m = std::log(m_hat);
  s.delta_star = 2.0 * std::exp(-std::pow(log_m, options.gamma));
  s.phi = std::pow(log_m, -options.gamma_exponent);
  const double cube_root = std::cbrt(s.delta_star / (2.0 * m_hat));
  switch (options.presmooth_rule) {
    case PresmoothRule::WindowScaled:
      s.presmooth_bandwidth = 0.5 * s.delta_star * cube_root;
      break;
    case PresmoothRule::Literal:
      s.presmooth_bandwidth = cube_root;
      break;
  }
  if (options.presmooth_bandwidth) {
    if (!(*options.presmooth_bandwidth > 0.0)) throw ConfigurationError("presmoothing bandwidth must be positive");
    s.presmooth_bandwidth = *options.presmooth_bandwidth;
  }
  return s;
}

double presmoothed_derivative(const CurveObservations& curve, double t, int d, double bandwidth, Kernel kernel) {
  if (d == 0) return nw_value(curve, t, bandwidth, kernel);
  const auto w = lp_weights(curve, t, bandwidth, d + 1, kernel, d + 2, d);
  return w.degenerate ? nan : w.apply(curve.values());
}

ThetaEstimate estimate_theta(const FunctionalDataset& dataset, int d, double s, double t,
                             const RegularitySchedule& schedule) {
  return estimate_theta(dataset, d, s, t, schedule, schedule.presmooth_kernel);
}

ThetaEstimate estimate_theta(const FunctionalDataset& dataset, int d, double s, double t,
                             const RegularitySchedule& schedule, Kernel kernel) {
  if (s == t) throw ArgumentError("theta needs two distinct points");
  if (!(s > 0.0 && s < 1.0 && t > 0.0 && t < 1.0)) throw DomainError("theta points must lie in (0,1)");
  if (d < 0 || d > schedule.delta_max) throw ArgumentError("derivative order exceeds delta_max");

  ThetaEstimate out;
  double acc = 0.0;
  for (const auto& curve : dataset.curves()) {
    const double xs = presmoothed_derivative(curve, s, d, schedule.presmooth_bandwidth, kernel);
    const double xt = presmoothed_derivative(curve, t, d, schedule.presmooth_bandwidth, kernel);
    if (std::isnan(xs) || std::isnan(xt)) continue;
    acc += (xt - xs) * (xt - xs);
    ++out.retained;
  }
  if (out.retained == 0) throw InsufficientDataError("no curve defined at both theta points", 0);
  out.value = acc / static_cast<double>(out.retained);
  return out;
}

double estimate_H_raw(double theta_13, double theta_12) {
  if (!(theta_13 > 0.0) || !(theta_12 > 0.0))
    throw DegenerateIncrementError("theta estimates must be positive to estimate H");
  return (std::log(theta_13) - std::log(theta_12)) / (2.0 * std::numbers::ln2);
}

double estimate_H(double theta_13, double theta_12) {
  return std::clamp(estimate_H_raw(theta_13, theta_12), H_lower_clip, H_upper_clip);
}

int select_delta(std::span<const double> H_by_d, double phi, int delta_max) {
  const int limit = std::min<int>(delta_max, static_cast<int>(H_by_d.size()) - 1);
  for (int d = 0; d <= limit; ++d)
    if (H_by_d[static_cast<std::size_t>(d)] < 1.0 - phi) return d;
  return delta_max;
}

double estimate_L2(double theta_23, double theta_12, double t1, double t2, double t3, double alpha_hat,
                   int delta_hat) {
  if (!(t1 < t2 && t2 < t3)) throw ArgumentError("L2 estimate needs t1 < t2 < t3");
  if (!(theta_23 > 0.0) || !(theta_12 > 0.0)) throw ArgumentError("L2 estimate needs positive theta values");
  const double exponent = 2.0 * (alpha_hat - static_cast<double>(delta_hat));
  return 0.5 * (theta_23 / std::pow(t3 - t2, exponent) + theta_12 / std::pow(t2 - t1, exponent));
}

RegularityEstimate estimate_regularity(const FunctionalDataset& dataset, double anchor_t2,
                                       const RegularitySchedule& schedule) {
  RegularityEstimate out;
  out.anchor_t2 = anchor_t2;
  out.t1 = anchor_t2 - schedule.half_window();
  out.t3 = anchor_t2 + schedule.half_window();
  if (!(out.t1 > 0.0 && out.t3 < 1.0))
    throw DomainError("anchor window [" + std::to_string(out.t1) + ", " + std::to_string(out.t3) +
                      "] leaves (0,1)");

  const std::array<double, 3> points{out.t1, anchor_t2, out.t3};
  const double h = schedule.presmooth_bandwidth;
  const Kernel kernel = schedule.presmooth_kernel;

  std::vector<std::size_t> retained_by_d;
  for (int d = 0; d <= schedule.delta_max; ++d) {
    double s12 = 0.0, s13 = 0.0, s23 = 0.0;
    std::size_t retained = 0;
    for (const auto& curve : dataset.curves()) {
      std::array<double, 3> x{};
      bool defined = true;
      for (std::size_t k = 0; k < 3 && defined; ++k) {
        x[k] = presmoothed_derivative(curve, points[k], d, h, kernel);
        defined = !std::isnan(x[k]);
      }
      if (!defined) continue;
      s12 += (x[1] - x[0]) * (x[1] - x[0]);
      s13 += (x[2] - x[0]) * (x[2] - x[0]);
      s23 += (x[2] - x[1]) * (x[2] - x[1]);
      ++retained;
    }
    // A derivative level the data cannot support ends the search at the
    // previous level.
    const bool usable = retained > 0 && s12 > 0.0 && s13 > 0.0;
    if (d > 0 && !usable) break;
    if (retained == 0)
      throw InsufficientDataError("no curve defined at t1, t2 and t3 for d = " + std::to_string(d), 0);
    const double n = static_cast<double>(retained);
    out.theta_12_by_d.push_back(s12 / n);
    out.theta_13_by_d.push_back(s13 / n);
    out.theta_23_by_d.push_back(s23 / n);
    out.H_hat.push_back(estimate_H(s13 / n, s12 / n));
    retained_by_d.push_back(retained);
    if (out.H_hat.back() < 1.0 - schedule.phi) break;
  }

  const int computed = static_cast<int>(out.H_hat.size()) - 1;
  out.delta_hat = std::min(select_delta(out.H_hat, schedule.phi, schedule.delta_max), computed);
  const auto d = static_cast<std::size_t>(out.delta_hat);
  out.alpha_hat = out.delta_hat + out.H_hat[d];
  out.theta_12 = out.theta_12_by_d[d];
  out.theta_13 = out.theta_13_by_d[d];
  out.theta_23 = out.theta_23_by_d[d];
  out.retained_curves = retained_by_d[d];
  out.L2_hat = estimate_L2(out.theta_23, out.theta_12, out.t1, anchor_t2, out.t3, out.alpha_hat, out.delta_hat);
  return out;
}

std::vector<double> regularity_anchors(std::size_t count, const RegularitySchedule& schedule, double lo,
                                       double hi) {
  if (count == 0) throw ArgumentError("at least one anchor is required");
  // Keep a small gap so the window stays strictly inside the open domain.
  const double margin = schedule.half_window() * (1.0 + 1e-9) + 1e-9;
  if (!(margin < 0.5)) throw ConfigurationError("anchor window does not fit in (0,1)");
  std::vector<double> anchors(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    anchors[k] = std::clamp(t, margin, 1.0 - margin);
  }
  return anchors;
}

std::vector<RegularityEstimate> estimate_regularity_anchors(const FunctionalDataset& dataset,
                                                            std::span<const double> anchors,
                                                            const RegularitySchedule& schedule,
                                                            std::size_t workers) {
  std::vector<RegularityEstimate> out(anchors.size());
  parallel_for(anchors.size(), workers,
               [&](std::size_t k) { out[k] = estimate_regularity(dataset, anchors[k], schedule); });
  return out;
}

const RegularityEstimate& nearest_anchor(std::span<const RegularityEstimate> anchors, double t) {
  if (anchors.empty()) throw ArgumentError("no regularity anchors");
  std::size_t best = 0;
  for (std::size_t k = 1; k < anchors.size(); ++k)
    if (std::abs(anchors[k].anchor_t2 - t) < std::abs(anchors[best].anchor_t2 - t)) best = k;
  return anchors[best];
}

int noise_neighbourhood_size(double m_hat) {
  if (!(m_hat > 1.0)) return 2;
  const double ll = std::log(std::log(m_hat));
  const double k0 = std::floor(m_hat * std::exp(-ll * ll));
  return std::max(2, static_cast<int>(k0));
}

namespace {

// Indices m >= 1 (so that m - 1 exists) of the `count` times closest to t.
void nearest_difference_indices(std::span<const double> times, double t, std::size_t count,
                                std::vector<std::size_t>& out) {
  out.clear();
  const std::size_t n = times.size();
  count = std::min(count, n - 1);
  auto right = static_cast<std::size_t>(std::lower_bound(times.begin() + 1, times.end(), t) - times.begin());
  std::size_t left = right;  // candidates are [1, left) on the left and [right, n) on the right
  while (out.size() < count) {
    const bool has_left = left > 1;
    const bool has_right = right < n;
    if (has_left && (!has_right || t - times[left - 1] <= times[right] - t)) {
      out.push_back(--left);
    } else {
      out.push_back(right++);
    }
  }
}

}  // namespace

NoiseEstimate estimate_noise(const FunctionalDataset& dataset, const EvalGrid& grid, NoiseMode mode,
                             std::optional<int> K0_override) {
  for (const auto& c : dataset.curves())
    if (c.size() < 2) throw ConfigurationError("noise estimation needs at least 2 observations per curve");

  NoiseEstimate out;
  out.mode = mode;
  out.grid.assign(grid.points().begin(), grid.points().end());
  out.K0 = K0_override ? *K0_override : noise_neighbourhood_size(dataset.m_hat());
  if (out.K0 < 2) throw ConfigurationError("K0 must be at least 2");

  const auto n_curves = static_cast<double>(dataset.size());
  out.sigma2_grid.resize(static_cast<Eigen::Index>(grid.size()));

  if (mode == NoiseMode::Constant) {
    double total = 0.0;
    for (const auto& c : dataset.curves()) {
      const auto y = c.values();
      double acc = 0.0;
      for (std::size_t m = 1; m < y.size(); ++m) acc += (y[m] - y[m - 1]) * (y[m] - y[m - 1]);
      total += acc / (2.0 * static_cast<double>(y.size() - 1));
    }
    out.sigma2_grid.setConstant(total / n_curves);
  } else {
    std::vector<std::size_t> idx;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double total = 0.0;
      for (const auto& c : dataset.curves()) {
        nearest_difference_indices(c.times(), grid[g], static_cast<std::size_t>(out.K0), idx);
        const auto y = c.values();
        double acc = 0.0;
        for (const auto m : idx) acc += (y[m] - y[m - 1]) * (y[m] - y[m - 1]);
        total += acc / (2.0 * static_cast<double>(idx.size()));
      }
      out.sigma2_grid[static_cast<Eigen::Index>(g)] = total / n_curves;
    }
  }
  out.sigma2_max = out.sigma2_grid.maxCoeff();
  return out;
}

}  // namespace fdadapt
