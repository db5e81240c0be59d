#include "fdadapt/mean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fdadapt/error.hpp"
#include "fdadapt/local_polynomial.hpp"
#include "fdadapt/parallel.hpp"

namespace fdadapt {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

std::vector<double> BandwidthGrid::points() const {
  if (!(h_min > 0.0 && h_min < h_max && h_max < 1.0) || count < 2)
    throw ConfigurationError("bandwidth grid needs 0 < h_min < h_max < 1 and at least 2 points");
  std::vector<double> out(count);
  const double step = std::log(h_max / h_min) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) out[k] = h_min * std::exp(step * static_cast<double>(k));
  out.front() = h_min;
  out.back() = h_max;
  return out;
}

BandwidthGrid BandwidthGrid::for_mean(double m_hat) {
  return {std::min(1.0 / m_hat, 0.25), 0.5, 151};
}

BandwidthGrid BandwidthGrid::for_covariance() { return {0.01, 0.1, 41}; }

int lp_order_for(double alpha_hat) {
  return std::clamp(static_cast<int>(std::floor(alpha_hat)), 0, max_lp_order);
}

int effective_k0(int k0, int order) { return std::max(k0, order + 1); }

CurveSmooth smooth_curve(const CurveObservations& curve, double t, double h, int order, Kernel kernel, int k0,
                         double alpha) {
  CurveSmooth out;
  const auto w = lp_weights(curve, t, h, order, kernel, k0);
  if (w.degenerate) return out;
  out.included = true;
  out.value = w.apply(curve.values());
  out.abs_sum = w.abs_sum();
  out.abs_moment = w.abs_moment_sum(curve.times(), alpha);
  out.max_abs = w.max_abs();
  return out;
}

InclusionStats inclusion_stats(const FunctionalDataset& dataset, double t, double h, int order, Kernel kernel,
                               int k0, double alpha) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  InclusionStats s;
  s.t = t;
  s.h = h;
  s.order = order;
  s.k0 = k0;
  s.alpha = alpha;
  s.w.assign(dataset.size(), 0);
  s.c = Eigen::VectorXd::Zero(n);
  s.c_alpha = Eigen::VectorXd::Zero(n);
  s.N_i = Eigen::VectorXd::Zero(n);
  s.values = Eigen::VectorXd::Zero(n);

  double inverse_sum = 0.0;  // Σ w_i c_i / 𝒩_i
  double c_product = 0.0;    // Σ w_i c_i c_i(α)
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto fit = smooth_curve(dataset.curve(static_cast<std::size_t>(i)), t, h, order, kernel, k0, alpha);
    if (!fit.included) continue;
    s.w[static_cast<std::size_t>(i)] = 1;
    ++s.W_N;
    s.c[i] = fit.abs_sum;
    s.c_alpha[i] = fit.abs_moment;
    s.N_i[i] = 1.0 / fit.max_abs;
    s.values[i] = fit.value;
    inverse_sum += fit.abs_sum * fit.max_abs;
    c_product += fit.abs_sum * fit.abs_moment;
  }
  if (s.W_N > 0) {
    const double W = static_cast<double>(s.W_N);
    s.N_mu = W * W / inverse_sum;
    s.C_bar1 = c_product / W;
  }
  return s;
}

MeanRiskTerms mean_risk(const InclusionStats& stats, const RegularityEstimate& reg, const NoiseEstimate& noise,
                        double var_X_t, std::size_t N, const SmoothingPlan& plan) {
  MeanRiskTerms r;
  const double alpha = reg.alpha_hat;
  const double c_bar = plan.kernel_moment_approx ? kernel_abs_moment(plan.kernel, 2.0 * alpha) : stats.C_bar1;
  const double fact = factorial(lp_order_for(alpha));
  r.q1_sq = c_bar * reg.L2_hat / (fact * fact);
  r.q2_sq = noise.sigma2_max;
  r.q3_sq = var_X_t;
  if (stats.W_N == 0) {
    r.bias = r.variance = r.dropout = inf;
    return r;
  }
  r.bias = r.q1_sq * std::pow(stats.h, 2.0 * alpha);
  r.variance = r.q2_sq / stats.N_mu;
  r.dropout = r.q3_sq * (1.0 / static_cast<double>(stats.W_N) - 1.0 / static_cast<double>(N));
  return r;
}

namespace {

RiskProfile mean_profile_for_k0(const FunctionalDataset& dataset, double t, const RegularityEstimate& reg,
                                const NoiseEstimate& noise, double var_X_t, std::span<const double> hs,
                                const SmoothingPlan& plan, int order, int k0) {
  RiskProfile p;
  p.t = t;
  p.bandwidths.assign(hs.begin(), hs.end());
  const auto n = static_cast<Eigen::Index>(hs.size());
  p.term_bias.resize(n);
  p.term_var.resize(n);
  p.term_dropout.resize(n);
  p.total.resize(n);
  p.q1_sq.resize(n);
  p.W_N.resize(hs.size());
  p.k0_star = k0;

  double best = inf;
  bool found = false;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto stats =
        inclusion_stats(dataset, t, hs[static_cast<std::size_t>(k)], order, plan.kernel, k0, 2.0 * reg.alpha_hat);
    const auto r = mean_risk(stats, reg, noise, var_X_t, dataset.size(), plan);
    p.term_bias[k] = r.bias;
    p.term_var[k] = r.variance;
    p.term_dropout[k] = r.dropout;
    p.total[k] = r.total();
    p.q1_sq[k] = r.q1_sq;
    p.q2_sq = r.q2_sq;
    p.q3_sq = r.q3_sq;
    p.W_N[static_cast<std::size_t>(k)] = stats.W_N;
    if (stats.W_N > 0 && p.total[k] < best) {
      best = p.total[k];
      p.star_index = static_cast<std::size_t>(k);
      found = true;
    }
  }
  if (!found) throw NoAdmissibleBandwidthError("no bandwidth includes any curve at t = " + std::to_string(t));
  p.h_star = p.bandwidths[p.star_index];
  return p;
}

}  // namespace

RiskProfile select_mean_bandwidth(const FunctionalDataset& dataset, double t, const RegularityEstimate& reg,
                                  const NoiseEstimate& noise, double var_X_t, const BandwidthGrid& grid,
                                  const SmoothingPlan& plan) {
  const auto hs = grid.points();
  const int order = lp_order_for(reg.alpha_hat);
  if (!plan.optimize_k0)
    return mean_profile_for_k0(dataset, t, reg, noise, var_X_t, hs, plan, order, effective_k0(plan.k0, order));

  std::optional<RiskProfile> best;
  for (int k0 = order + 1; k0 <= order + 3; ++k0) {
    try {
      auto p = mean_profile_for_k0(dataset, t, reg, noise, var_X_t, hs, plan, order, k0);
      if (!best || p.total[static_cast<Eigen::Index>(p.star_index)] <
                       best->total[static_cast<Eigen::Index>(best->star_index)])
        best = std::move(p);
    } catch (const NoAdmissibleBandwidthError&) {
    }
  }
  if (!best) throw NoAdmissibleBandwidthError("no bandwidth includes any curve at t = " + std::to_string(t));
  return *best;
}

double presmoothed_variance(const FunctionalDataset& dataset, double t, const RegularitySchedule& schedule) {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& c : dataset.curves()) {
    const double x = nw_value(c, t, schedule.presmooth_bandwidth, schedule.presmooth_kernel);
    if (std::isnan(x)) continue;
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  return std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
}

SmoothedMean smoothed_mean(const FunctionalDataset& dataset, double t, double h, int order, Kernel kernel,
                           int k0) {
  SmoothedMean out;
  double acc = 0.0;
  for (const auto& c : dataset.curves()) {
    const auto w = lp_weights(c, t, h, order, kernel, k0);
    if (w.degenerate) continue;
    acc += w.apply(c.values());
    ++out.W_N;
  }
  out.value = out.W_N ? acc / static_cast<double>(out.W_N) : nan;
  return out;
}

double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty()) throw ArgumentError("interpolation needs at least one node");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto upper = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const std::size_t lower = upper - 1;
  if (x == xs[lower]) return ys[lower];
  const double w = (x - xs[lower]) / (xs[upper] - xs[lower]);
  return (1.0 - w) * ys[lower] + w * ys[upper];
}

double MeanEstimate::mu_at(double t) const {
  if (grid.empty() || t < grid.front() || t > grid.back()) return nan;
  const auto upper = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
  if (grid[upper] == t) return mu[static_cast<Eigen::Index>(upper)];
  const std::size_t lower = upper - 1;
  const double w = (t - grid[lower]) / (grid[upper] - grid[lower]);
  return (1.0 - w) * mu[static_cast<Eigen::Index>(lower)] + w * mu[static_cast<Eigen::Index>(upper)];
}

MeanEstimate estimate_mean(const FunctionalDataset& dataset, const EvalGrid& grid,
                           std::span<const RegularityEstimate> anchors, const NoiseEstimate& noise,
                           const RegularitySchedule& schedule, const MeanOptions& options) {
  if (anchors.empty()) throw ArgumentError("mean estimation needs at least one regularity anchor");

  // Bandwidths at the anchors; anchors without an admissible bandwidth are
  // left out of the interpolation.
  std::vector<std::optional<RiskProfile>> profiles(anchors.size());
  parallel_for(anchors.size(), options.workers, [&](std::size_t k) {
    const double t = anchors[k].anchor_t2;
    const double var_x = presmoothed_variance(dataset, t, schedule);
    try {
      profiles[k] = select_mean_bandwidth(dataset, t, anchors[k], noise, var_x, options.bandwidths, options.plan);
    } catch (const NoAdmissibleBandwidthError&) {
    }
  });

  MeanEstimate out;
  std::vector<double> anchor_t, anchor_h, anchor_k0;
  for (auto& p : profiles) {
    if (!p) continue;
    anchor_t.push_back(p->t);
    anchor_h.push_back(p->h_star);
    anchor_k0.push_back(p->k0_star);
    out.anchor_profiles.push_back(std::move(*p));
  }
  if (anchor_t.empty()) throw NoAdmissibleBandwidthError("no regularity anchor admits a bandwidth");

  const auto n = static_cast<Eigen::Index>(grid.size());
  out.grid.assign(grid.points().begin(), grid.points().end());
  out.mu.resize(n);
  out.h_star.resize(n);
  out.alpha.resize(n);
  out.W_N.resize(grid.size());
  out.risk_bias.resize(n);
  out.risk_var.resize(n);
  out.risk_dropout.resize(n);

  parallel_for(grid.size(), options.workers, [&](std::size_t g) {
    const double t = grid[g];
    const auto& reg = nearest_anchor(anchors, t);
    const double h = interpolate_linear(anchor_t, anchor_h, t);
    const int order = lp_order_for(reg.alpha_hat);
    int k0 = effective_k0(options.plan.k0, order);
    if (options.plan.optimize_k0) {
      const auto nearest = std::min_element(anchor_t.begin(), anchor_t.end(), [t](double a, double b) {
        return std::abs(a - t) < std::abs(b - t);
      });
      k0 = static_cast<int>(anchor_k0[static_cast<std::size_t>(nearest - anchor_t.begin())]);
    }
    const auto stats = inclusion_stats(dataset, t, h, order, options.plan.kernel, k0, 2.0 * reg.alpha_hat);
    const auto risk = mean_risk(stats, reg, noise, presmoothed_variance(dataset, t, schedule), dataset.size(),
                                options.plan);
    const auto i = static_cast<Eigen::Index>(g);
    out.h_star[i] = h;
    out.alpha[i] = reg.alpha_hat;
    out.W_N[g] = stats.W_N;
    out.mu[i] = stats.W_N ? stats.values.sum() / static_cast<double>(stats.W_N) : nan;
    out.risk_bias[i] = risk.bias;
    out.risk_var[i] = risk.variance;
    out.risk_dropout[i] = risk.dropout;
  });
  return out;
}

}  // namespace fdadapt
