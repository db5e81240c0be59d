#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fdadapt/error.hpp"
#include "fdadapt/regularity.hpp"
#include "fdadapt/simulation.hpp"
#include "support.hpp"

using namespace fdadapt;
using testing::make_curve;

namespace {

FunctionalDataset constant_curves(std::size_t n, int m, double level) {
  std::vector<CurveObservations> curves;
  std::vector<double> t(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) t[static_cast<std::size_t>(k)] = (k + 1.0) / (m + 1.0);
  for (std::size_t i = 0; i < n; ++i)
    curves.push_back(make_curve(static_cast<std::int64_t>(i), t, std::vector<double>(t.size(), level)));
  return FunctionalDataset(std::move(curves));
}

}  // namespace

TEST_CASE("schedule constants") {
  const auto s300 = make_schedule(300.0);
  CHECK(s300.delta_star == doctest::Approx(0.1835786454994314).epsilon(1e-13));
  CHECK(s300.phi == doctest::Approx(0.030737892761016232).epsilon(1e-13));
  CHECK(s300.presmooth_bandwidth == doctest::Approx(0.0061851343244273957).epsilon(1e-13));
  CHECK(s300.half_window() == doctest::Approx(s300.delta_star / 4.0));

  ScheduleOptions literal;
  literal.presmooth_rule = PresmoothRule::Literal;
  CHECK(make_schedule(300.0, literal).presmooth_bandwidth == doctest::Approx(0.067384028328573251).epsilon(1e-13));

  const auto s100 = make_schedule(100.0);
  CHECK(s100.delta_star == doctest::Approx(0.23391000169891568).epsilon(1e-13));
  CHECK(s100.phi == doctest::Approx(0.047152924252903475).epsilon(1e-13));
  CHECK(s100.presmooth_bandwidth == doctest::Approx(0.012322298598634306).epsilon(1e-13));
  CHECK(make_schedule(40.0).delta_star == doctest::Approx(0.29302469153069283).epsilon(1e-13));
  CHECK(make_schedule(40.0).presmooth_bandwidth == doctest::Approx(0.022584594564896698).epsilon(1e-13));

  ScheduleOptions fixed;
  fixed.presmooth_bandwidth = 0.02;
  CHECK(make_schedule(300.0, fixed).presmooth_bandwidth == 0.02);

  CHECK_THROWS_AS(make_schedule(1.0), ConfigurationError);
  ScheduleOptions bad;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(make_schedule(100.0, bad), ConfigurationError);
  bad = {};
  bad.delta_max = 4;
  CHECK_THROWS_AS(make_schedule(100.0, bad), ConfigurationError);
}

TEST_CASE("H estimate") {
  CHECK(estimate_H(2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(estimate_H(4.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(estimate_H(1.0, 1.0) == H_lower_clip);
  CHECK(estimate_H(100.0, 1.0) == H_upper_clip);
  CHECK(estimate_H_raw(1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(estimate_H(0.0, 1.0), DegenerateIncrementError);
  CHECK_THROWS_AS(estimate_H(1.0, -1.0), DegenerateIncrementError);
}

TEST_CASE("delta selection") {
  const std::vector<double> h0{0.7};
  CHECK(select_delta(h0, 0.05, 2) == 0);
  const std::vector<double> h01{0.99, 0.5};
  CHECK(select_delta(h01, 0.05, 2) == 1);
  CHECK(select_delta(h01, 0.05, 2) + h01[1] == doctest::Approx(1.5));
  const std::vector<double> flat{0.99, 0.98, 0.97};
  CHECK(select_delta(flat, 0.05, 2) == 2);
}

TEST_CASE("L2 estimate") {
  const double gap = 0.05, H = 0.5;
  const double base = std::pow(gap, 2.0 * H);
  CHECK(estimate_L2(base, base, 0.45, 0.5, 0.55, H, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(estimate_L2(2.0 * base, base, 0.45, 0.5, 0.55, H, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_L2(0.0, base, 0.45, 0.5, 0.55, H, 0), ArgumentError);
}

TEST_CASE("theta estimate") {
  auto sched = make_schedule(50.0);
  CHECK(estimate_theta(constant_curves(5, 50, 3.0), 0, 0.3, 0.6, sched).value == 0.0);

  // Two curves whose presmoothed differences between s and t are 0.1 and 0.3.
  std::vector<double> t(99);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = (k + 1.0) / 100.0;
  std::vector<double> y1(t.size()), y2(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    y1[k] = t[k] < 0.5 ? 0.0 : 0.1;
    y2[k] = t[k] < 0.5 ? 1.0 : 1.3;
  }
  FunctionalDataset two({make_curve(1, t, y1), make_curve(2, t, y2)});
  sched.presmooth_bandwidth = 0.05;
  const auto theta = estimate_theta(two, 0, 0.3, 0.7, sched);
  CHECK(theta.retained == 2);
  CHECK(theta.value == doctest::Approx(0.05).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_theta(two, 0, 0.3, 0.3, sched), ArgumentError);
  CHECK_THROWS_AS(estimate_theta(two, 0, 0.0, 0.3, sched), DomainError);

  FunctionalDataset sparse({make_curve(1, {0.1, 0.9}, {0, 1}), make_curve(2, {0.2, 0.8}, {0, 1})});
  try {
    (void)estimate_theta(sparse, 0, 0.45, 0.55, sched);
    FAIL("expected insufficient data");
  } catch (const InsufficientDataError& e) {
    CHECK(e.retained() == 0);
  }
}

TEST_CASE("theta on Brownian paths matches the increment variance") {
  const auto data = sample_dataset(ProcessSpec::fbm(0.5), {DesignKind::IndependentUniform, 400, 0.0},
                                   NoiseSpec::none(), 500, 21);
  auto sched = make_schedule(data.dataset.m_hat());
  const double s = 0.45, t = 0.5;
  const auto theta = estimate_theta(data.dataset, 0, s, t, sched);
  // Monte-Carlo spread of the per-curve squared increments.
  std::vector<double> sq;
  for (const auto& c : data.dataset.curves()) {
    const double a = presmoothed_derivative(c, s, 0, sched.presmooth_bandwidth, sched.presmooth_kernel);
    const double b = presmoothed_derivative(c, t, 0, sched.presmooth_bandwidth, sched.presmooth_kernel);
    if (!std::isnan(a) && !std::isnan(b)) sq.push_back((a - b) * (a - b));
  }
  const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / sq.size();
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (sq.size() - 1) / sq.size());
  CHECK(theta.value == doctest::Approx(mean));
  CHECK(std::abs(theta.value - 0.05) <= 3.0 * se + 0.005);
}

TEST_CASE("regularity of Brownian motion") {
  const auto data = sample_dataset(ProcessSpec::fbm(0.5), {DesignKind::IndependentUniform, 300, 0.2},
                                   NoiseSpec::none(), 500, 5);
  const auto sched = make_schedule(data.dataset.m_hat());
  const auto anchors = regularity_anchors(9, sched, 0.2, 0.8);
  const auto est = estimate_regularity_anchors(data.dataset, anchors, sched, 2);
  std::vector<double> alpha, l2;
  for (const auto& e : est) {
    alpha.push_back(e.alpha_hat);
    l2.push_back(e.L2_hat);
    CHECK(e.delta_hat == 0);
    CHECK(e.t1 == doctest::Approx(e.anchor_t2 - sched.half_window()));
  }
  std::sort(alpha.begin(), alpha.end());
  std::sort(l2.begin(), l2.end());
  CHECK(std::abs(alpha[4] - 0.5) < 0.1);
  CHECK(std::abs(l2[4] - 1.0) < 0.2);
}

TEST_CASE("regularity is invariant to affine value maps") {
  const auto data = sample_dataset(ProcessSpec::fou(1.0, 1.0), {DesignKind::IndependentUniform, 200, 0.2},
                                   NoiseSpec::homoscedastic(0.05), 200, 9);
  const auto sched = make_schedule(data.dataset.m_hat());
  const auto base = estimate_regularity(data.dataset, 0.5, sched);
  const auto scaled = estimate_regularity(data.dataset.affine_values(3.0, -2.0), 0.5, sched);
  CHECK(scaled.alpha_hat == doctest::Approx(base.alpha_hat).epsilon(1e-10));
  CHECK(scaled.delta_hat == base.delta_hat);
  CHECK(scaled.L2_hat == doctest::Approx(9.0 * base.L2_hat).epsilon(1e-9));
}

TEST_CASE("anchors and nearest anchor") {
  const auto sched = make_schedule(100.0);
  const auto a = regularity_anchors(5, sched);
  REQUIRE(a.size() == 5);
  for (double v : a) {
    CHECK(v - sched.half_window() > 0.0);
    CHECK(v + sched.half_window() < 1.0);
  }
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK_THROWS_AS(regularity_anchors(0, sched), ArgumentError);

  std::vector<RegularityEstimate> est(3);
  est[0].anchor_t2 = 0.2;
  est[1].anchor_t2 = 0.5;
  est[2].anchor_t2 = 0.8;
  CHECK(nearest_anchor(est, 0.0).anchor_t2 == 0.2);
  CHECK(nearest_anchor(est, 0.35).anchor_t2 == 0.2);
  CHECK(nearest_anchor(est, 0.36).anchor_t2 == 0.5);
  CHECK(nearest_anchor(est, 1.0).anchor_t2 == 0.8);
}

TEST_CASE("noise estimation") {
  CHECK(noise_neighbourhood_size(1000.0) == 23);
  CHECK(noise_neighbourhood_size(3.0) == 2);

  const auto grid = EvalGrid::uniform(0.0, 1.0, 21);
  auto noisy = sample_dataset(ProcessSpec::kl(2.0, 1), {DesignKind::IndependentUniform, 500, 0.0},
                              NoiseSpec::homoscedastic(0.1), 50, 4);
  const auto constant = estimate_noise(noisy.dataset, grid, NoiseMode::Constant);
  CHECK(constant.sigma2_max == doctest::Approx(0.01).epsilon(0.1));
  const auto local = estimate_noise(noisy.dataset, grid, NoiseMode::TimeVarying);
  CHECK(local.K0 == noise_neighbourhood_size(noisy.dataset.m_hat()));
  CHECK(local.sigma2_grid.size() == 21);
  CHECK(local.sigma2_max >= local.sigma2_grid.minCoeff());
  CHECK(local.sigma2_grid.mean() == doctest::Approx(0.01).epsilon(0.15));

  auto smooth = sample_dataset(ProcessSpec::fou(1.0, 1.0), {DesignKind::IndependentUniform, 500, 0.0},
                               NoiseSpec::none(), 50, 4);
  // Lipschitz paths: sin curves.
  std::vector<CurveObservations> lip;
  for (const auto& c : smooth.dataset.curves()) {
    std::vector<double> t(c.times().begin(), c.times().end()), y(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) y[k] = std::sin(6.0 * t[k] + static_cast<double>(c.id()));
    lip.push_back(make_curve(c.id(), t, y));
  }
  CHECK(estimate_noise(FunctionalDataset(std::move(lip)), grid, NoiseMode::Constant).sigma2_max <= 1e-3);

  CHECK_THROWS_AS(estimate_noise(noisy.dataset, grid, NoiseMode::TimeVarying, 1), ConfigurationError);
}
