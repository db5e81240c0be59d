#include "fdadapt/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fdadapt/error.hpp"
#include "fdadapt/kernel.hpp"
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

std::vector<CurveSmooth> fit_all(const FunctionalDataset& dataset, double t, double h, int order, Kernel kernel,
                                 int k0, double alpha) {
  std::vector<CurveSmooth> out;
  out.reserve(dataset.size());
  for (const auto& c : dataset.curves()) out.push_back(smooth_curve(c, t, h, order, kernel, k0, alpha));
  return out;
}

// Bilinear interpolation on a tensor lattice, constant beyond the ends.
double bilinear(std::span<const double> xs, const Eigen::MatrixXd& values, double s, double t) {
  auto locate = [&](double x, std::size_t& lo, double& w) {
    if (xs.size() == 1 || x <= xs.front()) {
      lo = 0;
      w = 0.0;
      return;
    }
    if (x >= xs.back()) {
      lo = xs.size() - 2;
      w = 1.0;
      return;
    }
    lo = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    w = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
  };
  std::size_t i = 0, j = 0;
  double wi = 0.0, wj = 0.0;
  locate(s, i, wi);
  locate(t, j, wj);
  const auto I = static_cast<Eigen::Index>(i);
  const auto J = static_cast<Eigen::Index>(j);
  if (xs.size() == 1) return values(0, 0);
  return (1 - wi) * (1 - wj) * values(I, J) + wi * (1 - wj) * values(I + 1, J) + (1 - wi) * wj * values(I, J + 1) +
         wi * wj * values(I + 1, J + 1);
}

}  // namespace

PairInclusionStats pair_inclusion_stats(std::span<const CurveSmooth> at_s, std::span<const CurveSmooth> at_t,
                                        double s, double t, double h) {
  if (at_s.size() != at_t.size()) throw ArgumentError("pair statistics need fits for the same curves");
  PairInclusionStats p;
  p.s = s;
  p.t = t;
  p.h = h;
  p.w_pair.assign(at_s.size(), 0);
  double inv_t = 0.0, inv_s = 0.0, cf_t = 0.0, cf_s = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < at_s.size(); ++i) {
    const auto& a = at_s[i];
    const auto& b = at_t[i];
    p.W_N_s += a.included;
    p.W_N_t += b.included;
    if (!(a.included && b.included)) continue;
    p.w_pair[i] = 1;
    ++p.W_N_pair;
    inv_t += b.abs_sum * b.max_abs;
    inv_s += a.abs_sum * a.max_abs;
    cf_t += b.abs_sum * b.abs_moment;
    cf_s += a.abs_sum * a.abs_moment;
    cross += a.value * b.value;
  }
  if (p.W_N_pair == 0) {
    p.gamma = nan;
    return p;
  }
  const double W = static_cast<double>(p.W_N_pair);
  p.N_Gamma_t_given_s = W * W / inv_t;
  p.N_Gamma_s_given_t = W * W / inv_s;
  p.C_frak_t_given_s = cf_t / W;
  p.C_frak_s_given_t = cf_s / W;
  p.gamma = cross / W;
  return p;
}

PairInclusionStats pair_inclusion_stats(const FunctionalDataset& dataset, double s, double t, double h,
                                        int order_s, int order_t, Kernel kernel, int k0, double alpha_s,
                                        double alpha_t) {
  const auto at_s = fit_all(dataset, s, h, order_s, kernel, effective_k0(k0, order_s), alpha_s);
  const auto at_t = fit_all(dataset, t, h, order_t, kernel, effective_k0(k0, order_t), alpha_t);
  return pair_inclusion_stats(at_s, at_t, s, t, h);
}

CovarianceRiskTerms covariance_risk(const PairInclusionStats& pair, const RegularityEstimate& reg_s,
                                    const RegularityEstimate& reg_t, const NoiseEstimate& noise, double m2_s,
                                    double m2_t, double var_XsXt, std::size_t N, const SmoothingPlan& plan) {
  CovarianceRiskTerms r;
  if (pair.W_N_pair == 0 || !(pair.h < 0.5 * std::abs(pair.t - pair.s))) {
    r.t_given_s = {inf, inf, inf};
    r.s_given_t = {inf, inf, inf};
    return r;
  }
  const double dropout = 0.5 * var_XsXt * (1.0 / static_cast<double>(pair.W_N_pair) - 1.0 / static_cast<double>(N));
  // ℛ_Γ(b | a): smoothing at b, moments of X_a.
  auto conditional = [&](const RegularityEstimate& reg_b, double m2_a, double c_frak, double n_gamma) {
    ConditionalRisk c;
    const double alpha = reg_b.alpha_hat;
    const double cbar = plan.kernel_moment_approx ? kernel_abs_moment(plan.kernel, 2.0 * alpha) : c_frak;
    const double fact = factorial(lp_order_for(alpha));
    c.bias = 2.0 * m2_a * cbar * reg_b.L2_hat / (fact * fact) * std::pow(pair.h, 2.0 * alpha);
    c.variance = noise.sigma2_max * m2_a / n_gamma;
    c.dropout = dropout;
    return c;
  };
  r.t_given_s = conditional(reg_t, m2_s, pair.C_frak_t_given_s, pair.N_Gamma_t_given_s);
  r.s_given_t = conditional(reg_s, m2_t, pair.C_frak_s_given_t, pair.N_Gamma_s_given_t);
  return r;
}

PairMoments presmoothed_pair_moments(const FunctionalDataset& dataset, double s, double t,
                                     const RegularitySchedule& schedule) {
  double ss = 0.0, tt = 0.0, p1 = 0.0, p2 = 0.0;
  std::size_t n = 0;
  for (const auto& c : dataset.curves()) {
    const double xs = nw_value(c, s, schedule.presmooth_bandwidth, schedule.presmooth_kernel);
    const double xt = nw_value(c, t, schedule.presmooth_bandwidth, schedule.presmooth_kernel);
    if (std::isnan(xs) || std::isnan(xt)) continue;
    ss += xs * xs;
    tt += xt * xt;
    p1 += xs * xt;
    p2 += xs * xs * xt * xt;
    ++n;
  }
  PairMoments m;
  if (n == 0) return m;
  const double dn = static_cast<double>(n);
  m.m2_s = ss / dn;
  m.m2_t = tt / dn;
  if (n >= 2) m.var_product = std::max(0.0, (p2 - p1 * p1 / dn) / (dn - 1.0));
  return m;
}

DiagonalBand diagonal_band_width(const FunctionalDataset& dataset, double alpha_hat) {
  if (!(alpha_hat > 0.0)) throw ArgumentError("band width needs alpha_hat > 0");
  const double n = static_cast<double>(dataset.size());
  double inv = 0.0;
  for (const auto& c : dataset.curves()) inv += 1.0 / static_cast<double>(c.size());
  const double a2 = 2.0 * alpha_hat;
  DiagonalBand band;
  band.c = (a2 + 0.5) / ((a2 + 1.0) * (a2 + 1.0));
  if (!(a2 / ((a2 + 1.0) * (a2 + 1.0)) < band.c && band.c < 1.0 / (a2 + 1.0)))
    throw ConfigurationError("band exponent outside its admissible bracket");
  band.d = std::pow(inv / (n * n), band.c);
  return band;
}

CovarianceSurface estimate_covariance(const FunctionalDataset& dataset, const EvalGrid& grid_s,
                                      const EvalGrid& grid_t, std::span<const RegularityEstimate> anchors,
                                      const NoiseEstimate& noise, const RegularitySchedule& schedule,
                                      const MeanEstimate& mean_result, const CovarianceOptions& options) {
  if (anchors.empty()) throw ArgumentError("covariance estimation needs regularity anchors");
  const double lo = std::min(grid_s.lo(), grid_t.lo());
  const double hi = std::max(grid_s.hi(), grid_t.hi());
  if (options.subtract_mean &&
      (mean_result.grid.empty() || mean_result.grid.front() > lo || mean_result.grid.back() < hi))
    throw ArgumentError("mean estimate does not cover the covariance grids");

  const auto& plan = options.plan;
  const std::size_t N = dataset.size();
  CovarianceSurface out;
  out.grid_s.assign(grid_s.points().begin(), grid_s.points().end());
  out.grid_t.assign(grid_t.points().begin(), grid_t.points().end());

  double alpha_mean = 0.0;
  for (const auto& a : anchors) alpha_mean += a.alpha_hat;
  alpha_mean /= static_cast<double>(anchors.size());
  const auto band = diagonal_band_width(dataset, alpha_mean);
  out.band_width_d = band.d;
  out.band_exponent_c = band.c;
  const double d = band.d;
  if (!(d < hi - lo)) throw SurfaceError("diagonal band is wider than the grid range");

  // Per-anchor fits for every candidate bandwidth.
  const auto hs = options.bandwidths.points();
  const std::size_t A = anchors.size();
  const std::size_t K = hs.size();
  out.anchors.resize(A);
  for (std::size_t a = 0; a < A; ++a) out.anchors[a] = anchors[a].anchor_t2;
  if (!std::is_sorted(out.anchors.begin(), out.anchors.end()))
    throw ArgumentError("regularity anchors must be sorted");

  std::vector<std::vector<CurveSmooth>> fits(A * K);
  parallel_for(A * K, options.workers, [&](std::size_t idx) {
    const std::size_t a = idx / K;
    const auto& reg = anchors[a];
    const int order = lp_order_for(reg.alpha_hat);
    fits[idx] = fit_all(dataset, reg.anchor_t2, hs[idx % K], order, plan.kernel, effective_k0(plan.k0, order),
                        2.0 * reg.alpha_hat);
  });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = a + 1; b < A; ++b)
      if (out.anchors[b] - out.anchors[a] > d) pairs.emplace_back(a, b);

  std::vector<double> pair_h(pairs.size(), nan);
  parallel_for(pairs.size(), options.workers, [&](std::size_t p) {
    const auto [a, b] = pairs[p];
    const double s = out.anchors[a];
    const double t = out.anchors[b];
    const auto moments = presmoothed_pair_moments(dataset, s, t, schedule);
    double best = inf;
    for (std::size_t k = 0; k < K; ++k) {
      if (!(hs[k] < 0.5 * (t - s))) break;
      const auto stats = pair_inclusion_stats(fits[a * K + k], fits[b * K + k], s, t, hs[k]);
      if (stats.W_N_pair == 0) continue;
      const double risk = covariance_risk(stats, anchors[a], anchors[b], noise, moments.m2_s, moments.m2_t,
                                          moments.var_product, N, plan)
                              .total();
      if (risk < best) {
        best = risk;
        pair_h[p] = hs[k];
      }
    }
  });

  out.anchor_h = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(A), nan);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto a = static_cast<Eigen::Index>(pairs[p].first);
    const auto b = static_cast<Eigen::Index>(pairs[p].second);
    out.anchor_h(a, b) = out.anchor_h(b, a) = pair_h[p];
  }
  // Unsolved entries (in-band or without an admissible h) take the nearest
  // solved one.
  Eigen::MatrixXd filled = out.anchor_h;
  bool any = false;
  for (Eigen::Index a = 0; a < filled.rows(); ++a)
    for (Eigen::Index b = 0; b < filled.cols(); ++b) any = any || !std::isnan(out.anchor_h(a, b));
  if (!any) throw NoAdmissibleBandwidthError("no off-band anchor pair admits a covariance bandwidth");
  for (Eigen::Index a = 0; a < filled.rows(); ++a) {
    for (Eigen::Index b = 0; b < filled.cols(); ++b) {
      if (!std::isnan(filled(a, b))) continue;
      double best = inf;
      for (Eigen::Index x = 0; x < filled.rows(); ++x) {
        for (Eigen::Index y = 0; y < filled.cols(); ++y) {
          if (std::isnan(out.anchor_h(x, y))) continue;
          const double ds = out.anchors[static_cast<std::size_t>(x)] - out.anchors[static_cast<std::size_t>(a)];
          const double dt = out.anchors[static_cast<std::size_t>(y)] - out.anchors[static_cast<std::size_t>(b)];
          const double dist = ds * ds + dt * dt;
          if (dist < best) {
            best = dist;
            filled(a, b) = out.anchor_h(x, y);
          }
        }
      }
    }
  }

  // Distinct evaluation points (s < t) for the whole lattice.
  const bool same_grid = grid_s == grid_t;
  const auto ns = static_cast<Eigen::Index>(grid_s.size());
  const auto nt = static_cast<Eigen::Index>(grid_t.size());
  std::map<std::pair<double, double>, std::size_t> index;
  std::vector<std::pair<double, double>> points;
  Eigen::MatrixX<std::size_t> slot(ns, nt);
  out.in_band = Eigen::MatrixX<bool>::Constant(ns, nt, false);
  const double u_lo = lo + 0.5 * d;
  const double u_hi = hi - 0.5 * d;
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) {
      double s = std::min(grid_s[static_cast<std::size_t>(i)], grid_t[static_cast<std::size_t>(j)]);
      double t = std::max(grid_s[static_cast<std::size_t>(i)], grid_t[static_cast<std::size_t>(j)]);
      if (t - s <= d) {
        out.in_band(i, j) = true;
        double u;
        if (same_grid) {
          // One representative per anti-diagonal keeps the fill exact.
          const auto k = static_cast<std::size_t>(i + j);
          u = 0.5 * (grid_s[k / 2] + grid_s[k - k / 2]);
        } else {
          u = 0.5 * (s + t);
        }
        const double uc = std::clamp(u, u_lo, u_hi);
        if (uc != u) ++out.clamped_points;
        s = uc - 0.5 * d;
        t = uc + 0.5 * d;
      }
      const auto [it, inserted] = index.try_emplace({s, t}, points.size());
      if (inserted) points.emplace_back(s, t);
      slot(i, j) = it->second;
    }
  }

  struct PointValue {
    double gamma = nan;
    double Gamma = nan;
    double h = nan;
    std::size_t W = 0;
  };
  std::vector<PointValue> values(points.size());
  parallel_for(points.size(), options.workers, [&](std::size_t p) {
    const auto [s, t] = points[p];
    const double cap = std::nextafter(0.5 * (t - s), 0.0);
    const double h = std::min(bilinear(out.anchors, filled, s, t), cap);
    const int order_s = lp_order_for(nearest_anchor(anchors, s).alpha_hat);
    const int order_t = lp_order_for(nearest_anchor(anchors, t).alpha_hat);
    const auto stats = pair_inclusion_stats(dataset, s, t, h, order_s, order_t, plan.kernel, plan.k0, 0.0, 0.0);
    auto& v = values[p];
    v.h = h;
    v.W = stats.W_N_pair;
    if (stats.W_N_pair == 0) return;
    v.gamma = stats.gamma;
    v.Gamma = options.subtract_mean ? stats.gamma - mean_result.mu_at(s) * mean_result.mu_at(t) : stats.gamma;
  });

  out.values.resize(ns, nt);
  out.gamma_values.resize(ns, nt);
  out.h_star.resize(ns, nt);
  out.W_N_pair.resize(ns, nt);
  out.undefined_mask.resize(ns, nt);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) {
      const auto& v = values[slot(i, j)];
      out.values(i, j) = v.Gamma;
      out.gamma_values(i, j) = v.gamma;
      out.h_star(i, j) = v.h;
      out.W_N_pair(i, j) = static_cast<int>(v.W);
      out.undefined_mask(i, j) = std::isnan(v.Gamma);
    }
  }
  for (Eigen::Index i = 0; i < ns; ++i)
    if (out.undefined_mask.row(i).all())
      throw SurfaceError("covariance undefined along the whole row s = " +
                         std::to_string(grid_s[static_cast<std::size_t>(i)]));
  for (Eigen::Index j = 0; j < nt; ++j)
    if (out.undefined_mask.col(j).all())
      throw SurfaceError("covariance undefined along the whole column t = " +
                         std::to_string(grid_t[static_cast<std::size_t>(j)]));

  if (options.psd_clip && same_grid && !out.undefined_mask.any()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.values);
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd clipped = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    for (Eigen::Index i = 0; i < ns; ++i)
      for (Eigen::Index j = 0; j < i; ++j) clipped(i, j) = clipped(j, i);
    out.values = std::move(clipped);
  }
  return out;
}

double diagonal_fill_error(const std::function<double(double, double)>& cov, double d) {
  if (!(d > 0.0 && d < 1.0)) throw ArgumentError("band width must lie in (0, 1)");
  constexpr double tol = 1e-15;
  const double u_lo = 0.5 * d;
  const double u_hi = 1.0 - 0.5 * d;
  auto inner = [&](double v) {
    auto f = [&](double u) {
      const double uc = std::clamp(u, u_lo, u_hi);
      const double diff = cov(uc - 0.5 * d, uc + 0.5 * d) - cov(u - 0.5 * v, u + 0.5 * v);
      return diff * diff;
    };
    // Split at the clamp points, where the integrand has kinks.
    const double a = 0.5 * v;
    const double b = 1.0 - 0.5 * v;
    std::vector<double> cuts{a};
    for (double c : {u_lo, u_hi})
      if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      if (cuts[k + 1] > cuts[k]) total += adaptive_simpson(f, cuts[k], cuts[k + 1], tol, 30);
    return total;
  };
  return adaptive_simpson(inner, 0.0, d, tol, 30);
}

}  // namespace fdadapt
