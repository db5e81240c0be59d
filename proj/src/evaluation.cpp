#include "fdadapt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <tuple>

#include "fdadapt/csv.hpp"
#include "fdadapt/error.hpp"
#include "fdadapt/parallel.hpp"

namespace fdadapt {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double ise_1d(const Eigen::Ref<const Eigen::VectorXd>& f, const Eigen::Ref<const Eigen::VectorXd>& g,
              std::span<const double> grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (f.size() != n || g.size() != n) throw ArgumentError("ISE inputs must match the grid length");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ArgumentError("ISE grid must be sorted");
  Eigen::VectorXd e = (f - g).array().square();
  double integral = 0.0, covered = 0.0;
  std::size_t defined = 0;
  for (Eigen::Index k = 0; k < n; ++k) defined += !std::isnan(e[k]);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (std::isnan(e[k]) || std::isnan(e[k + 1])) continue;
    const double w = grid[static_cast<std::size_t>(k + 1)] - grid[static_cast<std::size_t>(k)];
    integral += 0.5 * w * (e[k] + e[k + 1]);
    covered += w;
  }
  if (defined < 2 || covered <= 0.0) throw EvaluationError("ISE needs at least two adjacent defined points");
  return integral * (grid.back() - grid.front()) / covered;
}

double ise_2d(const Eigen::Ref<const Eigen::MatrixXd>& f, const Eigen::Ref<const Eigen::MatrixXd>& g,
              std::span<const double> grid_s, std::span<const double> grid_t) {
  const auto ns = static_cast<Eigen::Index>(grid_s.size());
  const auto nt = static_cast<Eigen::Index>(grid_t.size());
  if (f.rows() != ns || f.cols() != nt || g.rows() != ns || g.cols() != nt)
    throw ArgumentError("ISE inputs must match the grid shape");
  Eigen::MatrixXd e = (f - g).array().square();
  double integral = 0.0, covered = 0.0;
  for (Eigen::Index i = 0; i + 1 < ns; ++i) {
    const double ws = grid_s[static_cast<std::size_t>(i + 1)] - grid_s[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j + 1 < nt; ++j) {
      const double c = e(i, j) + e(i + 1, j) + e(i, j + 1) + e(i + 1, j + 1);
      if (std::isnan(c)) continue;
      const double area = ws * (grid_t[static_cast<std::size_t>(j + 1)] - grid_t[static_cast<std::size_t>(j)]);
      integral += 0.25 * area * c;
      covered += area;
    }
  }
  if (covered <= 0.0) throw EvaluationError("ISE needs at least one fully defined grid cell");
  return integral * (grid_s.back() - grid_s.front()) * (grid_t.back() - grid_t.front()) / covered;
}

Eigen::VectorXd empirical_mean_tilde(const Eigen::Ref<const Eigen::MatrixXd>& paths) {
  if (paths.rows() < 1) throw ArgumentError("mean of latent paths needs at least one path");
  return paths.colwise().mean().transpose();
}

Eigen::MatrixXd empirical_cov_tilde(const Eigen::Ref<const Eigen::MatrixXd>& paths) {
  if (paths.rows() < 2) throw ArgumentError("covariance of latent paths needs at least two paths");
  const Eigen::MatrixXd centred = paths.rowwise() - paths.colwise().mean();
  Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(paths.rows() - 1);
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) cov(i, j) = cov(j, i);
  return cov;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return nan;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RateSlope fit_rate_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("rate slope needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
  }
  RateSlope r;
  r.slope = sxy / sxx;
  if (x.size() < 3) {
    r.se = nan;
    return r;
  }
  double ssr = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double resid = std::log(y[k]) - my - r.slope * (std::log(x[k]) - mx);
    ssr += resid * resid;
  }
  r.se = std::sqrt(ssr / (n - 2.0) / sxx);
  return r;
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t config_id, std::size_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(config_id), static_cast<std::uint32_t>(rep),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(rep) >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

ReplicationResult run_replication(const ExperimentConfig& config, std::size_t config_id, std::size_t rep) {
  const auto& size = config.sizes.at(config_id);
  ReplicationResult r;
  r.config_id = config_id;
  r.N = size.N;
  r.m = size.m;
  r.p = config.design == DesignKind::CommonEquidistant ? 0.0 : config.p_jitter;
  r.rep = rep;
  r.ise_cov_tilde = r.ise_cov_true = nan;

  const auto grid = EvalGrid::uniform(0.0, 1.0, config.grid_points);
  DesignSpec design{config.design, size.m, r.p};
  auto options = config.pipeline;
  options.workers = 1;
  try {
    const auto sim = sample_dataset(config.process, design, config.noise, size.N,
                                    replication_seed(config.seed, config_id, rep), grid);
    const auto mean = run_mean_pipeline(sim.dataset, grid, options);
    r.ise_mean_tilde = ise_1d(mean.mean.mu, empirical_mean_tilde(sim.latent_grid), grid.points());
    r.ise_mean_true = ise_1d(mean.mean.mu, sim.true_mean_grid, grid.points());
    if (config.estimate_covariance) {
      const auto cov = run_covariance_pipeline(sim.dataset, grid, mean, options);
      const auto n = static_cast<Eigen::Index>(grid.size());
      Eigen::MatrixXd truth(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          truth(i, j) = true_covariance(config.process, grid[static_cast<std::size_t>(i)],
                                        grid[static_cast<std::size_t>(j)]);
      r.ise_cov_tilde = ise_2d(cov.surface.values, empirical_cov_tilde(sim.latent_grid), grid.points(),
                               grid.points());
      r.ise_cov_true = ise_2d(cov.surface.values, truth, grid.points(), grid.points());
    }
  } catch (const EstimationError& e) {
    r.failed = true;
    r.error = e.what();
    r.ise_mean_tilde = r.ise_mean_true = r.ise_cov_tilde = r.ise_cov_true = nan;
  }
  return r;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.sizes.empty()) throw ConfigurationError("experiment needs at least one (N, m) configuration");
  if (config.replications < 1) throw ConfigurationError("experiment needs at least one replication");
  config.process.validate();
  for (const auto& s : config.sizes) {
    if (s.N < 2) throw ConfigurationError("experiment configurations need N >= 2");
    DesignSpec{config.design, s.m, config.p_jitter}.validate();
  }

  ExperimentReport report;
  const std::size_t R = config.replications;
  report.rows.resize(config.sizes.size() * R);
  parallel_for(report.rows.size(), config.workers,
               [&](std::size_t k) { report.rows[k] = run_replication(config, k / R, k % R); });

  std::vector<double> nm, med_mt, med_mu, med_ct, med_cu;
  for (std::size_t c = 0; c < config.sizes.size(); ++c) {
    ConfigSummary s;
    s.config_id = c;
    s.N = config.sizes[c].N;
    s.m = config.sizes[c].m;
    s.p = config.design == DesignKind::CommonEquidistant ? 0.0 : config.p_jitter;
    s.replications = R;
    std::vector<double> mt, mu, ct, cu;
    std::string first_error;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& row = report.rows[c * R + r];
      if (row.failed) {
        if (s.failures++ == 0) first_error = row.error;
        continue;
      }
      mt.push_back(row.ise_mean_tilde);
      mu.push_back(row.ise_mean_true);
      ct.push_back(row.ise_cov_tilde);
      cu.push_back(row.ise_cov_true);
    }
    if (s.failures > 0 && 20 * s.failures >= R)
      throw ExperimentError("configuration " + std::to_string(c) + ": " + std::to_string(s.failures) + " of " +
                            std::to_string(R) + " replications failed; first error: " + first_error);
    auto quartiles = [](const std::vector<double>& v) {
      return Quartiles{quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
    };
    s.mean_tilde = quartiles(mt);
    s.mean_true = quartiles(mu);
    s.cov_tilde = quartiles(ct);
    s.cov_true = quartiles(cu);
    nm.push_back(static_cast<double>(s.N) * static_cast<double>(s.m));
    med_mt.push_back(s.mean_tilde.q50);
    med_mu.push_back(s.mean_true.q50);
    med_ct.push_back(s.cov_tilde.q50);
    med_cu.push_back(s.cov_true.q50);
    report.summaries.push_back(s);
  }

  const RateSlope none{nan, nan};
  const bool slopes = nm.size() >= 2;
  report.slope_mean_tilde = slopes ? fit_rate_slope(nm, med_mt) : none;
  report.slope_mean_true = slopes ? fit_rate_slope(nm, med_mu) : none;
  report.slope_cov_tilde = slopes && config.estimate_covariance ? fit_rate_slope(nm, med_ct) : none;
  report.slope_cov_true = slopes && config.estimate_covariance ? fit_rate_slope(nm, med_cu) : none;
  return report;
}

void write_replications_csv(std::ostream& out, const ExperimentReport& report) {
  out << "config_id,N,m,p,rep,ise_mean_tilde,ise_mean_true,ise_cov_tilde,ise_cov_true\n";
  csv::RowWriter w(out);
  for (const auto& r : report.rows) {
    w << r.config_id << r.N << r.m << r.p << r.rep << r.ise_mean_tilde << r.ise_mean_true << r.ise_cov_tilde
      << r.ise_cov_true;
    w.end();
  }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
  out << "config_id,N,m,p,replications,failures,metric,q25,q50,q75,rate_slope,rate_slope_se\n";
  csv::RowWriter w(out);
  for (const auto& s : report.summaries) {
    const std::tuple<const char*, const Quartiles*, const RateSlope*> metrics[] = {
        {"ise_mean_tilde", &s.mean_tilde, &report.slope_mean_tilde},
        {"ise_mean_true", &s.mean_true, &report.slope_mean_true},
        {"ise_cov_tilde", &s.cov_tilde, &report.slope_cov_tilde},
        {"ise_cov_true", &s.cov_true, &report.slope_cov_true}};
    for (const auto& [name, q, slope] : metrics) {
      w << s.config_id << s.N << s.m << s.p << s.replications << s.failures << std::string_view(name) << q->q25
        << q->q50 << q->q75 << slope->slope << slope->se;
      w.end();
    }
  }
}

}  // namespace fdadapt
