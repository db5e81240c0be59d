#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fdadapt/core_model.hpp"

namespace fdadapt {

/// μ(t) = β₀ t + √2 Σ_k {β₁ₖ cos(2kπt) + β₂ₖ sin(2kπt)}; all zero gives μ ≡ 0.
struct MeanFunction {
  double beta0 = 0.0;
  std::vector<double> beta1;
  std::vector<double> beta2;

  static MeanFunction zero() { return {}; }
  static MeanFunction fourier(double beta0, std::vector<double> beta1, std::vector<double> beta2);

  bool is_zero() const noexcept;
  double operator()(double t) const;
};

enum class ProcessKind { FBM, FOU, KLPowerLaw };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::FBM;
  double hurst = 0.5;    // FBM
  double fou_a = 1.0;    // FOU scale
  double fou_rho = 1.0;  // FOU exponent, in (0, 2)
  double kl_nu = 2.0;    // KL eigenvalue decay, > 1
  int kl_terms = 1000;
  MeanFunction mean;

  static ProcessSpec fbm(double hurst);
  static ProcessSpec fou(double a, double rho);
  static ProcessSpec kl(double nu, int terms = 1000);

  /// H₀ for FBM, ρ/2 for FOU, (ν − 1)/2 for KL.
  double true_alpha() const;
  void validate() const;
};

double true_covariance(const ProcessSpec& spec, double s, double t);

enum class NoiseKind { None, Homoscedastic, TimeVarying, StateDependent };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double sd = 0.0;
  std::function<double(double)> sd_of_t;
  std::function<double(double, double)> sd_of_tx;

  static NoiseSpec none() { return {}; }
  static NoiseSpec homoscedastic(double sd);
  static NoiseSpec time_varying(std::function<double(double)> f);
  static NoiseSpec state_dependent(std::function<double(double, double)> f);

  /// σ(t, x); throws GenerationError for negative or non-finite values.
  double operator()(double t, double x) const;
};

enum class DesignKind { IndependentUniform, CommonEquidistant };

struct DesignSpec {
  DesignKind kind = DesignKind::IndependentUniform;
  int m_mean = 100;
  double p_jitter = 0.0;  // ignored for the common design

  void validate() const;
};

struct SimulatedData {
  FunctionalDataset dataset;
  /// μ + X at each curve's observation times.
  std::vector<Eigen::VectorXd> latent;
  /// Optional evaluation grid with μ + X of every curve (row i = curve i).
  std::vector<double> grid;
  Eigen::MatrixXd latent_grid;
  Eigen::VectorXd true_mean_grid;
};

/// Draws N curves. Curve i uses its own generator seeded from (seed, i), so
/// the output does not depend on the worker count.
SimulatedData sample_dataset(const ProcessSpec& spec, const DesignSpec& design, const NoiseSpec& noise,
                             std::size_t N, std::uint64_t seed, const std::optional<EvalGrid>& latent_grid = {},
                             std::size_t workers = 1);

/// Symmetric factor F with F Fᵀ = C: Cholesky when it succeeds, otherwise an
/// eigen square root with eigenvalues in [-1e-10 λ_max, 0) clipped to zero.
/// Returns false when the matrix is indefinite beyond that tolerance.
bool covariance_factor(const Eigen::MatrixXd& C, Eigen::MatrixXd& F);

}  // namespace fdadapt
