// Command-line front end: simulate | regularity | mean | cov | experiment.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdadapt/core_model.hpp"
#include "fdadapt/covariance.hpp"
#include "fdadapt/csv.hpp"
#include "fdadapt/error.hpp"
#include "fdadapt/evaluation.hpp"
#include "fdadapt/parallel.hpp"
#include "fdadapt/pipeline.hpp"
#include "fdadapt/simulation.hpp"

namespace {

using namespace fdadapt;

struct ProcessArgs {
  std::string process = "fbm";
  double hurst = 0.5;
  double fou_a = 1.0;
  double rho = 1.0;
  double nu = 2.0;
  int kl_terms = 1000;
  double beta0 = 0.0;
  std::vector<double> beta1;
  std::vector<double> beta2;

  ProcessSpec spec() const {
    ProcessSpec p;
    if (process == "fbm") {
      p = ProcessSpec::fbm(hurst);
    } else if (process == "fou") {
      p = ProcessSpec::fou(fou_a, rho);
    } else {
      p = ProcessSpec::kl(nu, kl_terms);
    }
    p.mean = MeanFunction::fourier(beta0, beta1, beta2);
    return p;
  }
};

void add_process_options(CLI::App* cmd, ProcessArgs& a) {
  cmd->add_option("--process", a.process, "Latent process")
      ->check(CLI::IsMember({"fbm", "fou", "kl"}))
      ->capture_default_str();
  cmd->add_option("--hurst", a.hurst, "fBm Hurst exponent")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--fou-a", a.fou_a, "Fractional OU scale")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--rho", a.rho, "Fractional OU exponent")->check(CLI::Range(0.0, 2.0))->capture_default_str();
  cmd->add_option("--nu", a.nu, "KL eigenvalue decay")->capture_default_str();
  cmd->add_option("--kl-terms", a.kl_terms, "KL expansion length")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--mean-beta0", a.beta0, "Linear mean coefficient")->capture_default_str();
  cmd->add_option("--mean-beta1", a.beta1, "Cosine mean coefficients")->delimiter(',');
  cmd->add_option("--mean-beta2", a.beta2, "Sine mean coefficients")->delimiter(',');
}

struct EstimationArgs {
  std::string data;
  std::optional<std::vector<double>> rescale;
  std::string kernel = "biweight";
  int k0 = 2;
  bool optimize_k0 = false;
  bool kernel_moment = false;
  std::string noise_mode = "time-varying";
  std::optional<int> K0;
  std::string presmooth_rule = "window";
  std::optional<double> presmooth_bandwidth;
  double gamma = 0.5;
  double gamma_exponent = 2.0;
  int delta_max = 2;

  PipelineOptions pipeline(std::size_t workers) const {
    PipelineOptions o;
    o.schedule.gamma = gamma;
    o.schedule.gamma_exponent = gamma_exponent;
    o.schedule.delta_max = delta_max;
    o.schedule.presmooth_rule = presmooth_rule == "literal" ? PresmoothRule::Literal : PresmoothRule::WindowScaled;
    o.schedule.presmooth_bandwidth = presmooth_bandwidth;
    o.plan.kernel = Kernel{parse_kernel_kind(kernel)};
    o.plan.k0 = k0;
    o.plan.optimize_k0 = optimize_k0;
    o.plan.kernel_moment_approx = kernel_moment;
    o.noise_mode = noise_mode == "constant" ? NoiseMode::Constant : NoiseMode::TimeVarying;
    o.noise_K0 = K0;
    o.workers = workers;
    return o;
  }

  FunctionalDataset load() const {
    IngestOptions io;
    if (rescale) io.rescale_from = std::pair{(*rescale)[0], (*rescale)[1]};
    return ingest_long_csv(data, io);
  }
};

void add_schedule_options(CLI::App* cmd, EstimationArgs& a) {
  cmd->add_option("--presmooth-rule", a.presmooth_rule, "Presmoothing bandwidth rule")
      ->check(CLI::IsMember({"window", "literal"}))
      ->capture_default_str();
  cmd->add_option("--presmooth-bandwidth", a.presmooth_bandwidth, "Explicit presmoothing bandwidth")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gamma", a.gamma, "Exponent of the anchor spacing schedule")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--gamma-exponent", a.gamma_exponent, "Exponent of the H threshold schedule")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--delta-max", a.delta_max, "Largest derivative order searched")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
}

void add_data_options(CLI::App* cmd, EstimationArgs& a) {
  cmd->add_option("--data", a.data, "Long CSV with curve_id,t,y")->required()->check(CLI::ExistingFile);
  cmd->add_option("--rescale", a.rescale, "Raw time interval mapped onto (0,1)")->expected(2);
  add_schedule_options(cmd, a);
}

void add_smoothing_options(CLI::App* cmd, EstimationArgs& a) {
  cmd->add_option("--kernel", a.kernel, "Smoothing kernel")
      ->check(CLI::IsMember({"uniform", "epanechnikov", "biweight"}))
      ->capture_default_str();
  cmd->add_option("--k0", a.k0, "Minimum points in a smoothing window")->check(CLI::Range(1, 100))->capture_default_str();
  cmd->add_flag("--optimize-k0", a.optimize_k0, "Also select k0 by risk");
  cmd->add_flag("--kernel-moment", a.kernel_moment, "Use the kernel moment for the bias constant");
  cmd->add_option("--noise-mode", a.noise_mode, "Error variance estimator")
      ->check(CLI::IsMember({"time-varying", "constant"}))
      ->capture_default_str();
  cmd->add_option("--K0", a.K0, "Differences per noise neighbourhood")->check(CLI::Range(2, 1000000));
}

/// Runs fn on the file at path, or on stdout when path is empty.
void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open " + path + " for writing");
  fn(out);
  if (!out) throw ArgumentError("failed writing " + path);
}

int run(int argc, char** argv) {
  CLI::App app{"Adaptive mean and covariance estimation for noisy functional data"};
  app.set_config("--config", "", "Key-value configuration file; flags override its values");
  app.require_subcommand(1);
  std::size_t workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: FDA_ADAPT_WORKERS or 1)")
      ->check(CLI::Range(1, 1024));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate noisy functional data");
  ProcessArgs sim_proc;
  add_process_options(sim, sim_proc);
  std::size_t sim_n = 100;
  int sim_m = 100;
  double sim_p = 0.0;
  std::string sim_design = "independent";
  double sim_sd = 0.0;
  std::uint64_t sim_seed = 1;
  std::string sim_out, sim_latent;
  sim->add_option("--n", sim_n, "Number of curves")->check(CLI::Range(2, 10000000))->capture_default_str();
  sim->add_option("--m", sim_m, "Mean number of points per curve")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--p", sim_p, "Jitter of the per-curve point count")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  sim->add_option("--design", sim_design, "Observation design")
      ->check(CLI::IsMember({"independent", "common"}))
      ->capture_default_str();
  sim->add_option("--noise-sd", sim_sd, "Homoscedastic noise sd")->check(CLI::NonNegativeNumber)->capture_default_str();
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output CSV (stdout when omitted)");
  sim->add_option("--latent-out", sim_latent, "Latent values CSV curve_id,t,x_true");

  // regularity
  auto* reg = app.add_subcommand("regularity", "Estimate local regularity at anchor points");
  EstimationArgs reg_args;
  add_data_options(reg, reg_args);
  std::size_t reg_anchors = 50;
  std::string reg_out;
  reg->add_option("--anchors", reg_anchors, "Number of anchor points")->check(CLI::Range(1, 100000))->capture_default_str();
  reg->add_option("--out", reg_out, "Output CSV (stdout when omitted)");

  // mean
  auto* mean = app.add_subcommand("mean", "Adaptive mean estimate on a uniform grid");
  EstimationArgs mean_args;
  add_data_options(mean, mean_args);
  add_smoothing_options(mean, mean_args);
  std::size_t mean_grid = 101, mean_anchors = 50;
  std::string mean_out;
  mean->add_option("--grid", mean_grid, "Grid points on [0,1]")->check(CLI::Range(2, 1000000))->capture_default_str();
  mean->add_option("--anchors", mean_anchors, "Regularity anchors")->check(CLI::Range(1, 100000))->capture_default_str();
  mean->add_option("--out", mean_out, "Output CSV (stdout when omitted)");

  // cov
  auto* cov = app.add_subcommand("cov", "Adaptive covariance surface on a uniform grid");
  EstimationArgs cov_args;
  add_data_options(cov, cov_args);
  add_smoothing_options(cov, cov_args);
  std::size_t cov_grid = 101, cov_anchors = 10, cov_mean_anchors = 50;
  bool cov_psd = false;
  std::string cov_out;
  cov->add_option("--grid", cov_grid, "Grid points per axis on [0,1]")->check(CLI::Range(2, 100000))->capture_default_str();
  cov->add_option("--anchors", cov_anchors, "Covariance anchors per axis")->check(CLI::Range(1, 10000))->capture_default_str();
  cov->add_option("--mean-anchors", cov_mean_anchors, "Regularity anchors of the mean step")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  cov->add_flag("--psd-clip", cov_psd, "Clip negative eigenvalues of the surface");
  cov->add_option("--out", cov_out, "Output CSV (stdout when omitted)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Monte-Carlo replication experiment");
  ProcessArgs exp_proc;
  exp_proc.process = "fou";
  add_process_options(exp, exp_proc);
  EstimationArgs exp_args;
  add_schedule_options(exp, exp_args);
  add_smoothing_options(exp, exp_args);
  std::vector<std::string> exp_sizes{"40x40", "100x100", "200x200"};
  std::size_t exp_reps = 10, exp_grid = 101;
  double exp_p = 0.2, exp_sd = 0.05;
  std::string exp_design = "independent";
  std::uint64_t exp_seed = 1;
  bool exp_cov = false;
  std::string exp_out, exp_summary;
  exp->add_option("--sizes", exp_sizes, "Configurations NxM")->delimiter(',')->capture_default_str();
  exp->add_option("--replications", exp_reps, "Replications per configuration")
      ->check(CLI::Range(1, 100000000))
      ->capture_default_str();
  exp->add_option("--grid", exp_grid, "Evaluation grid points")->check(CLI::Range(2, 100000))->capture_default_str();
  exp->add_option("--p", exp_p, "Jitter of the per-curve point count")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  exp->add_option("--design", exp_design, "Observation design")
      ->check(CLI::IsMember({"independent", "common"}))
      ->capture_default_str();
  exp->add_option("--noise-sd", exp_sd, "Homoscedastic noise sd")->check(CLI::NonNegativeNumber)->capture_default_str();
  exp->add_option("--seed", exp_seed, "Random seed")->capture_default_str();
  exp->add_flag("--covariance", exp_cov, "Also estimate the covariance surface");
  exp->add_option("--out", exp_out, "Per-replication CSV (stdout when omitted)");
  exp->add_option("--summary", exp_summary, "Summary CSV with quartiles and rate slopes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (workers == 0) workers = default_workers();

  if (*sim) {
    const auto spec = sim_proc.spec();
    const DesignSpec design{sim_design == "common" ? DesignKind::CommonEquidistant : DesignKind::IndependentUniform,
                            sim_m, sim_design == "common" ? 0.0 : sim_p};
    const auto data = sample_dataset(spec, design, NoiseSpec::homoscedastic(sim_sd), sim_n, sim_seed, {}, workers);
    with_output(sim_out, [&](std::ostream& out) { write_long_csv(out, data.dataset); });
    if (!sim_latent.empty()) {
      with_output(sim_latent, [&](std::ostream& out) {
        out << "curve_id,t,x_true\n";
        csv::RowWriter w(out);
        for (std::size_t i = 0; i < data.dataset.size(); ++i) {
          const auto& c = data.dataset.curve(i);
          for (std::size_t m = 0; m < c.size(); ++m) {
            w << static_cast<long long>(c.id()) << c.times()[m] << data.latent[i][static_cast<Eigen::Index>(m)];
            w.end();
          }
        }
      });
    }
    return 0;
  }

  if (*reg) {
    const auto dataset = reg_args.load();
    const auto options = reg_args.pipeline(workers);
    const auto schedule = make_schedule(dataset.m_hat(), options.schedule);
    const auto anchors = regularity_anchors(reg_anchors, schedule);
    const auto est = estimate_regularity_anchors(dataset, anchors, schedule, workers);
    with_output(reg_out, [&](std::ostream& out) {
      out << "t2,t1,t3,delta_hat,H_hat,alpha_hat,L2_hat,theta_12,theta_13,retained_curves\n";
      csv::RowWriter w(out);
      for (const auto& e : est) {
        w << e.anchor_t2 << e.t1 << e.t3 << e.delta_hat << e.H_hat[static_cast<std::size_t>(e.delta_hat)]
          << e.alpha_hat << e.L2_hat << e.theta_12 << e.theta_13 << e.retained_curves;
        w.end();
      }
    });
    return 0;
  }

  if (*mean) {
    const auto dataset = mean_args.load();
    auto options = mean_args.pipeline(workers);
    options.mean_anchors = mean_anchors;
    const auto grid = EvalGrid::uniform(0.0, 1.0, mean_grid);
    const auto result = run_mean_pipeline(dataset, grid, options);
    const auto& m = result.mean;
    with_output(mean_out, [&](std::ostream& out) {
      out << "t,mu_hat,h_star,W_N,risk_bias,risk_var,risk_dropout\n";
      csv::RowWriter w(out);
      for (std::size_t g = 0; g < m.grid.size(); ++g) {
        const auto i = static_cast<Eigen::Index>(g);
        w << m.grid[g] << m.mu[i] << m.h_star[i] << m.W_N[g] << m.risk_bias[i] << m.risk_var[i]
          << m.risk_dropout[i];
        w.end();
      }
    });
    return 0;
  }

  if (*cov) {
    const auto dataset = cov_args.load();
    auto options = cov_args.pipeline(workers);
    options.mean_anchors = cov_mean_anchors;
    options.cov_anchors = cov_anchors;
    options.psd_clip = cov_psd;
    const auto grid = EvalGrid::uniform(0.0, 1.0, cov_grid);
    const auto mean_result = run_mean_pipeline(dataset, grid, options);
    const auto result = run_covariance_pipeline(dataset, grid, mean_result, options);
    const auto& s = result.surface;
    with_output(cov_out, [&](std::ostream& out) {
      out << "# d=" << csv::format_number(s.band_width_d) << " c=" << csv::format_number(s.band_exponent_c) << '\n';
      out << "s,t,gamma_hat,Gamma_hat,h_star,in_band,W_N_pair\n";
      csv::RowWriter w(out);
      for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
          w << s.grid_s[static_cast<std::size_t>(i)] << s.grid_t[static_cast<std::size_t>(j)] << s.gamma_values(i, j)
            << s.values(i, j) << s.h_star(i, j) << static_cast<int>(s.in_band(i, j)) << s.W_N_pair(i, j);
          w.end();
        }
      }
    });
    return 0;
  }

  if (*exp) {
    ExperimentConfig config;
    config.process = exp_proc.spec();
    config.noise = NoiseSpec::homoscedastic(exp_sd);
    config.design = exp_design == "common" ? DesignKind::CommonEquidistant : DesignKind::IndependentUniform;
    config.p_jitter = exp_p;
    config.sizes.clear();
    for (const auto& s : exp_sizes) {
      const auto x = s.find('x');
      const auto n = x == std::string::npos ? std::nullopt : csv::parse_integer(std::string_view(s).substr(0, x));
      const auto m = x == std::string::npos ? std::nullopt : csv::parse_integer(std::string_view(s).substr(x + 1));
      if (!n || !m || *n < 2 || *m < 1) throw ConfigurationError("size '" + s + "' is not of the form NxM");
      config.sizes.push_back({static_cast<std::size_t>(*n), static_cast<int>(*m)});
    }
    config.replications = exp_reps;
    config.seed = exp_seed;
    config.grid_points = exp_grid;
    config.estimate_covariance = exp_cov;
    config.pipeline = exp_args.pipeline(1);
    config.workers = workers;
    const auto report = run_experiment(config);
    with_output(exp_out, [&](std::ostream& out) { write_replications_csv(out, report); });
    if (!exp_summary.empty()) with_output(exp_summary, [&](std::ostream& out) { write_summary_csv(out, report); });
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fdadapt::ValidationError& e) {
    std::cerr << "fda_adapt: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const fdadapt::EstimationError& e) {
    std::cerr << "fda_adapt: estimation failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fda_adapt: error: " << e.what() << '\n';
    return 2;
  }
}
