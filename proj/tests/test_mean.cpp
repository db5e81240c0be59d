#include <doctest.h>

#include <cmath>
#include <random>

#include "fdadapt/error.hpp"
#include "fdadapt/local_polynomial.hpp"
#include "fdadapt/mean.hpp"
#include "fdadapt/pipeline.hpp"
#include "fdadapt/simulation.hpp"
#include "support.hpp"

using namespace fdadapt;
using testing::make_curve;

namespace {

FunctionalDataset toy_dataset() {
  return FunctionalDataset({make_curve(1, {0.1, 0.42, 0.47, 0.55, 0.8}, {1.0, 2.0, 2.5, 1.5, 0.0}),
                            make_curve(2, {0.2, 0.45, 0.58, 0.9}, {0.5, -1.0, 0.0, 3.0}),
                            make_curve(3, {0.05, 0.49, 0.95}, {2.0, 1.0, 4.0}),
                            make_curve(4, {0.41, 0.44, 0.5, 0.53, 0.59}, {0.1, 0.2, 0.3, 0.4, 0.5}),
                            make_curve(5, {0.3, 0.52, 0.56, 0.7}, {-2.0, 1.0, 1.2, 0.0})});
}

struct OracleStats {
  std::size_t W = 0;
  double inv_sum = 0.0;
  double c_prod = 0.0;
  double value_sum = 0.0;
};

// Brute-force enumeration over every (curve, observation) pair.
OracleStats enumerate(const FunctionalDataset& data, double t, double h, int order, Kernel kernel, int k0,
                      double a) {
  OracleStats o;
  for (const auto& c : data.curves()) {
    std::vector<double> times(c.times().begin(), c.times().end());
    std::size_t inside = 0;
    for (double x : times) inside += std::abs(x - t) <= h;
    if (inside < static_cast<std::size_t>(k0)) continue;
    const auto w = testing::dense_lp_oracle(times, t, h, order, 0, kernel);
    double c_i = 0.0, c_a = 0.0, max_w = 0.0, v = 0.0;
    for (std::size_t m = 0; m < times.size(); ++m) {
      const double wm = w[static_cast<Eigen::Index>(m)];
      c_i += std::abs(wm);
      c_a += std::abs(wm) * std::pow(std::abs(times[m] - t) / h, a);
      max_w = std::max(max_w, std::abs(wm));
      v += wm * c.values()[m];
    }
    ++o.W;
    o.inv_sum += c_i * max_w;
    o.c_prod += c_i * c_a;
    o.value_sum += v;
  }
  return o;
}

RegularityEstimate reg_with(double alpha, double L2) {
  RegularityEstimate r;
  r.alpha_hat = alpha;
  r.L2_hat = L2;
  return r;
}

NoiseEstimate noise_with(double s2) {
  NoiseEstimate n;
  n.sigma2_max = s2;
  return n;
}

}  // namespace

TEST_CASE("bandwidth grids") {
  const auto pts = BandwidthGrid{0.01, 0.1, 41}.points();
  CHECK(pts.size() == 41);
  CHECK(pts.front() == 0.01);
  CHECK(pts.back() == 0.1);
  CHECK(pts[20] == doctest::Approx(std::sqrt(0.001)));
  CHECK(BandwidthGrid::for_mean(100.0).h_min == doctest::Approx(0.01));
  CHECK(BandwidthGrid::for_mean(2.0).h_min == 0.25);
  CHECK_THROWS_AS((BandwidthGrid{0.2, 0.1, 5}.points()), ConfigurationError);
  CHECK(lp_order_for(0.7) == 0);
  CHECK(lp_order_for(1.5) == 1);
  CHECK(lp_order_for(9.0) == max_lp_order);
  CHECK(effective_k0(2, 2) == 3);
}

TEST_CASE("inclusion statistics match enumeration") {
  const auto data = toy_dataset();
  for (int order : {0, 1}) {
    for (double h : {0.055, 0.105, 0.205}) {
      const int k0 = effective_k0(2, order);
      const auto s = inclusion_stats(data, 0.5, h, order, epanechnikov_kernel, k0, 1.0);
      const auto o = enumerate(data, 0.5, h, order, epanechnikov_kernel, k0, 1.0);
      CHECK(s.W_N == o.W);
      if (o.W == 0) continue;
      CHECK(s.N_mu == doctest::Approx(o.W * o.W / o.inv_sum).epsilon(1e-10));
      CHECK(s.C_bar1 == doctest::Approx(o.c_prod / o.W).epsilon(1e-10));
      CHECK(s.values.sum() == doctest::Approx(o.value_sum).epsilon(1e-10));
    }
  }
  const auto none = inclusion_stats(data, 0.5, 0.001, 0, uniform_kernel, 2, 1.0);
  CHECK(none.W_N == 0);
  CHECK(none.N_mu == 0.0);
}

TEST_CASE("NW with a uniform kernel has unit absolute weight sums") {
  const auto data = toy_dataset();
  const auto s = inclusion_stats(data, 0.5, 0.1, 0, uniform_kernel, 2, 1.0);
  REQUIRE(s.W_N > 0);
  double c_alpha_mean = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!s.w[i]) continue;
    CHECK(s.c[static_cast<Eigen::Index>(i)] == doctest::Approx(1.0).epsilon(1e-14));
    c_alpha_mean += s.c_alpha[static_cast<Eigen::Index>(i)];
  }
  CHECK(s.C_bar1 == doctest::Approx(c_alpha_mean / s.W_N).epsilon(1e-14));
}

TEST_CASE("mean risk terms") {
  const auto data = toy_dataset();
  const auto reg = reg_with(0.6, 2.0);
  const auto s = inclusion_stats(data, 0.5, 0.1, 0, biweight_kernel, 2, 1.2);
  const auto r = mean_risk(s, reg, noise_with(0.04), 0.7, data.size());
  const auto o = enumerate(data, 0.5, 0.1, 0, biweight_kernel, 2, 1.2);
  const double bias = (o.c_prod / o.W) * 2.0 * std::pow(0.1, 1.2);
  const double var = 0.04 * o.inv_sum / (o.W * o.W);
  const double drop = 0.7 * (1.0 / o.W - 1.0 / 5.0);
  CHECK(r.bias == doctest::Approx(bias).epsilon(1e-12));
  CHECK(r.variance == doctest::Approx(var).epsilon(1e-12));
  CHECK(r.dropout == doctest::Approx(drop).epsilon(1e-12));
  CHECK(r.total() == doctest::Approx(bias + var + drop).epsilon(1e-12));

  SmoothingPlan approx;
  approx.kernel_moment_approx = true;
  const auto ra = mean_risk(s, reg, noise_with(0.04), 0.7, data.size(), approx);
  CHECK(ra.q1_sq == doctest::Approx(kernel_abs_moment(biweight_kernel, 1.2) * 2.0));

  const auto full = inclusion_stats(data, 0.5, 0.48, 0, biweight_kernel, 2, 1.2);
  REQUIRE(full.W_N == 5);
  CHECK(mean_risk(full, reg, noise_with(0.04), 0.7, 5).dropout == 0.0);

  const auto empty = inclusion_stats(data, 0.5, 0.001, 0, biweight_kernel, 2, 1.2);
  CHECK(std::isinf(mean_risk(empty, reg, noise_with(0.04), 0.7, 5).total()));
}

TEST_CASE("bias-only risk is increasing and picks the smallest admissible h") {
  std::vector<CurveObservations> curves;
  std::vector<double> t(101);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = k / 100.0 * 0.98 + 0.01;
  for (int i = 0; i < 4; ++i) curves.push_back(make_curve(i, t, std::vector<double>(t.size(), 1.0)));
  const FunctionalDataset data(std::move(curves));
  const auto reg = reg_with(0.5, 1.0);
  const auto p = select_mean_bandwidth(data, 0.5, reg, noise_with(0.0), 0.0, {0.001, 0.3, 60});
  double prev = -1.0;
  for (Eigen::Index k = 0; k < p.total.size(); ++k) {
    if (p.W_N[static_cast<std::size_t>(k)] != data.size()) continue;
    CHECK(p.total[k] > prev);
    prev = p.total[k];
  }
  std::size_t first = 0;
  while (p.W_N[first] == 0) ++first;
  CHECK(p.star_index == first);
}

TEST_CASE("common design bandwidth includes every curve") {
  const auto sim = sample_dataset(ProcessSpec::fou(1.0, 1.0), {DesignKind::CommonEquidistant, 50, 0.0},
                                  NoiseSpec::homoscedastic(0.05), 30, 2);
  const auto& data = sim.dataset;
  const auto sched = make_schedule(data.m_hat());
  const auto reg = estimate_regularity(data, 0.5, sched);
  const auto noise = estimate_noise(data, EvalGrid::uniform(0, 1, 11), NoiseMode::Constant);
  const auto p = select_mean_bandwidth(data, 0.5, reg, noise, presmoothed_variance(data, 0.5, sched),
                                       {0.002, 0.5, 151});
  CHECK(p.W_N[p.star_index] == data.size());
}

TEST_CASE("mean of identical constant curves") {
  std::vector<CurveObservations> curves;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const auto t = testing::sorted_uniform(rng, 60);
    curves.push_back(make_curve(i, t, std::vector<double>(t.size(), 4.25)));
  }
  const FunctionalDataset data(std::move(curves));
  const auto grid = EvalGrid::uniform(0.05, 0.95, 19);
  RegularityEstimate reg = reg_with(0.5, 1.0);
  reg.anchor_t2 = 0.5;
  std::vector<RegularityEstimate> anchors{reg};
  const auto sched = make_schedule(data.m_hat());
  MeanOptions opts;
  opts.bandwidths = BandwidthGrid::for_mean(data.m_hat());
  const auto est = estimate_mean(data, grid, anchors, noise_with(0.0), sched, opts);
  for (Eigen::Index k = 0; k < est.mu.size(); ++k)
    if (!std::isnan(est.mu[k])) CHECK(est.mu[k] == doctest::Approx(4.25).epsilon(1e-12));
  CHECK(est.mu_at(0.5) == doctest::Approx(4.25));
  CHECK(std::isnan(est.mu_at(0.99)));
}

TEST_CASE("smoothed mean of one repeated curve equals that curve's smooth") {
  std::mt19937_64 rng(12);
  const auto c = testing::random_curve(rng, 1, 80);
  const FunctionalDataset twice({c, make_curve(2, {c.times().begin(), c.times().end()},
                                               {c.values().begin(), c.values().end()})});
  const auto w = lp_weights(c, 0.4, 0.08, 1, biweight_kernel, 2);
  REQUIRE_FALSE(w.degenerate);
  const auto m = smoothed_mean(twice, 0.4, 0.08, 1, biweight_kernel, 2);
  CHECK(m.W_N == 2);
  CHECK(m.value == doctest::Approx(w.apply(c.values())).epsilon(1e-13));
  CHECK(std::isnan(smoothed_mean(twice, 0.4, 1e-6, 1, biweight_kernel, 2).value));
}

TEST_CASE("interpolation") {
  const std::vector<double> xs{0.0, 1.0, 3.0}, ys{1.0, 3.0, -1.0};
  CHECK(interpolate_linear(xs, ys, -1.0) == 1.0);
  CHECK(interpolate_linear(xs, ys, 0.5) == doctest::Approx(2.0));
  CHECK(interpolate_linear(xs, ys, 2.0) == doctest::Approx(1.0));
  CHECK(interpolate_linear(xs, ys, 5.0) == -1.0);
}

TEST_CASE("mean pipeline is affine equivariant") {
  const auto sim = sample_dataset(ProcessSpec::fou(1.0, 1.0), {DesignKind::IndependentUniform, 80, 0.2},
                                  NoiseSpec::homoscedastic(0.05), 60, 17);
  const auto grid = EvalGrid::uniform(0.0, 1.0, 21);
  PipelineOptions opts;
  opts.mean_anchors = 10;
  const auto base = run_mean_pipeline(sim.dataset, grid, opts);
  const auto moved = run_mean_pipeline(sim.dataset.affine_values(2.0, 1.0), grid, opts);
  for (Eigen::Index k = 0; k < base.mean.mu.size(); ++k) {
    CHECK(moved.mean.h_star[k] == doctest::Approx(base.mean.h_star[k]).epsilon(1e-9));
    CHECK(moved.mean.mu[k] == doctest::Approx(2.0 * base.mean.mu[k] + 1.0).epsilon(1e-9));
  }
}
