#include "fdadapt/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fdadapt/error.hpp"
#include "fdadapt/parallel.hpp"

namespace fdadapt {

MeanFunction MeanFunction::fourier(double beta0, std::vector<double> beta1, std::vector<double> beta2) {
  if (beta1.size() != beta2.size()) throw ConfigurationError("Fourier mean needs as many sine as cosine terms");
  return {beta0, std::move(beta1), std::move(beta2)};
}

bool MeanFunction::is_zero() const noexcept {
  return beta0 == 0.0 && std::all_of(beta1.begin(), beta1.end(), [](double b) { return b == 0.0; }) &&
         std::all_of(beta2.begin(), beta2.end(), [](double b) { return b == 0.0; });
}

double MeanFunction::operator()(double t) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < beta1.size(); ++k) {
    const double arg = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * t;
    acc += beta1[k] * std::cos(arg) + beta2[k] * std::sin(arg);
  }
  return beta0 * t + std::numbers::sqrt2 * acc;
}

ProcessSpec ProcessSpec::fbm(double hurst) {
  ProcessSpec p;
  p.kind = ProcessKind::FBM;
  p.hurst = hurst;
  p.validate();
  return p;
}

ProcessSpec ProcessSpec::fou(double a, double rho) {
  ProcessSpec p;
  p.kind = ProcessKind::FOU;
  p.fou_a = a;
  p.fou_rho = rho;
  p.validate();
  return p;
}

ProcessSpec ProcessSpec::kl(double nu, int terms) {
  ProcessSpec p;
  p.kind = ProcessKind::KLPowerLaw;
  p.kl_nu = nu;
  p.kl_terms = terms;
  p.validate();
  return p;
}

double ProcessSpec::true_alpha() const {
  switch (kind) {
    case ProcessKind::FBM: return hurst;
    case ProcessKind::FOU: return fou_rho / 2.0;
    case ProcessKind::KLPowerLaw: return (kl_nu - 1.0) / 2.0;
  }
  return 0.0;
}

void ProcessSpec::validate() const {
  switch (kind) {
    case ProcessKind::FBM:
      if (!(hurst > 0.0 && hurst < 1.0)) throw ConfigurationError("fBm Hurst exponent must lie in (0, 1)");
      break;
    case ProcessKind::FOU:
      if (!(fou_a > 0.0)) throw ConfigurationError("fractional OU scale must be positive");
      if (!(fou_rho > 0.0 && fou_rho < 2.0)) throw ConfigurationError("fractional OU exponent must lie in (0, 2)");
      break;
    case ProcessKind::KLPowerLaw:
      if (!(kl_nu > 1.0)) throw ConfigurationError("KL eigenvalue decay must exceed 1");
      if (kl_terms < 1) throw ConfigurationError("KL expansion needs at least one term");
      break;
  }
}

double true_covariance(const ProcessSpec& spec, double s, double t) {
  switch (spec.kind) {
    case ProcessKind::FBM: {
      const double h2 = 2.0 * spec.hurst;
      return 0.5 * (std::pow(std::abs(s), h2) + std::pow(std::abs(t), h2) - std::pow(std::abs(s - t), h2));
    }
    case ProcessKind::FOU:
      return std::exp(-spec.fou_a * std::pow(std::abs(s - t), spec.fou_rho));
    case ProcessKind::KLPowerLaw: {
      double acc = 1.0;
      for (int j = 2; j <= spec.kl_terms; ++j) {
        const double lambda = std::pow(static_cast<double>(j), -spec.kl_nu);
        const double w = 2.0 * std::numbers::pi * static_cast<double>(j / 2);
        acc += j % 2 == 0 ? 2.0 * lambda * std::cos(w * s) * std::cos(w * t)
                          : 2.0 * lambda * std::sin(w * s) * std::sin(w * t);
      }
      return acc;
    }
  }
  return 0.0;
}

NoiseSpec NoiseSpec::homoscedastic(double sd) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) throw ConfigurationError("noise sd must be finite and nonnegative");
  NoiseSpec n;
  n.kind = sd == 0.0 ? NoiseKind::None : NoiseKind::Homoscedastic;
  n.sd = sd;
  return n;
}

NoiseSpec NoiseSpec::time_varying(std::function<double(double)> f) {
  NoiseSpec n;
  n.kind = NoiseKind::TimeVarying;
  n.sd_of_t = std::move(f);
  return n;
}

NoiseSpec NoiseSpec::state_dependent(std::function<double(double, double)> f) {
  NoiseSpec n;
  n.kind = NoiseKind::StateDependent;
  n.sd_of_tx = std::move(f);
  return n;
}

double NoiseSpec::operator()(double t, double x) const {
  double v = 0.0;
  switch (kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Homoscedastic: v = sd; break;
    case NoiseKind::TimeVarying: v = sd_of_t(t); break;
    case NoiseKind::StateDependent: v = sd_of_tx(t, x); break;
  }
  if (!(v >= 0.0) || !std::isfinite(v)) throw GenerationError("noise sd must be finite and nonnegative", 0);
  return v;
}

void DesignSpec::validate() const {
  if (m_mean < 1) throw ConfigurationError("design needs at least one point per curve");
  if (!(p_jitter >= 0.0 && p_jitter < 1.0)) throw ConfigurationError("design jitter must lie in [0, 1)");
}

bool covariance_factor(const Eigen::MatrixXd& C, Eigen::MatrixXd& F) {
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() == Eigen::Success) {
    F = llt.matrixL();
    return true;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  if (eig.info() != Eigen::Success) return false;
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-10 * scale) return false;
  F = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return true;
}

namespace {

// Zero-mean latent values on sorted distinct points.
class LatentSampler {
 public:
  LatentSampler(const ProcessSpec& spec, std::vector<double> points, std::size_t curve)
      : spec_(spec), points_(std::move(points)) {
    markov_ = (spec.kind == ProcessKind::FBM && spec.hurst == 0.5) ||
              (spec.kind == ProcessKind::FOU && spec.fou_rho == 1.0);
    if (markov_ || spec.kind == ProcessKind::KLPowerLaw) return;
    // fBm is pinned to zero at t = 0.
    pinned_ = spec.kind == ProcessKind::FBM && !points_.empty() && points_.front() == 0.0;
    const std::size_t off = pinned_ ? 1 : 0;
    const auto n = static_cast<Eigen::Index>(points_.size() - off);
    Eigen::MatrixXd C(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        C(i, j) = C(j, i) = true_covariance(spec, points_[static_cast<std::size_t>(i) + off],
                                            points_[static_cast<std::size_t>(j) + off]);
    if (!covariance_factor(C, factor_))
      throw GenerationError("covariance factorisation failed", curve);
  }

  const std::vector<double>& points() const noexcept { return points_; }

  template <typename Rng>
  Eigen::VectorXd draw(Rng& rng) const {
    std::normal_distribution<double> normal;
    const auto n = static_cast<Eigen::Index>(points_.size());
    Eigen::VectorXd x(n);
    if (markov_) {
      double prev_t = 0.0, prev_x = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = points_[static_cast<std::size_t>(i)];
        const double z = normal(rng);
        if (spec_.kind == ProcessKind::FBM) {
          prev_x += std::sqrt(t - prev_t) * z;
        } else if (i == 0) {
          prev_x = z;
        } else {
          const double r = std::exp(-spec_.fou_a * (t - prev_t));
          prev_x = r * prev_x + std::sqrt(1.0 - r * r) * z;
        }
        prev_t = t;
        x[i] = prev_x;
      }
      return x;
    }
    if (spec_.kind == ProcessKind::KLPowerLaw) {
      const int J = spec_.kl_terms;
      std::vector<double> coef(static_cast<std::size_t>(J));
      for (int j = 1; j <= J; ++j)
        coef[static_cast<std::size_t>(j - 1)] = std::pow(static_cast<double>(j), -spec_.kl_nu / 2.0) * normal(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * points_[static_cast<std::size_t>(i)];
        const double c1 = std::cos(theta), s1 = std::sin(theta);
        double ck = 1.0, sk = 0.0;  // cos(kθ), sin(kθ)
        double acc = coef[0];
        for (int j = 2; j <= J; ++j) {
          if (j % 2 == 0) {
            const double c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = c;
            acc += std::numbers::sqrt2 * coef[static_cast<std::size_t>(j - 1)] * ck;
          } else {
            acc += std::numbers::sqrt2 * coef[static_cast<std::size_t>(j - 1)] * sk;
          }
        }
        x[i] = acc;
      }
      return x;
    }
    Eigen::VectorXd z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    if (!pinned_) return factor_ * z;
    x[0] = 0.0;
    x.tail(n - 1) = factor_ * z;
    return x;
  }

 private:
  const ProcessSpec& spec_;
  std::vector<double> points_;
  bool markov_ = false;
  bool pinned_ = false;
  Eigen::MatrixXd factor_;
};

std::mt19937_64 curve_rng(std::uint64_t seed, std::size_t curve) {
  const auto c = static_cast<std::uint64_t>(curve);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> uniform_times(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> t(static_cast<std::size_t>(count));
  for (;;) {
    for (auto& v : t) {
      do v = unif(rng);
      while (v <= 0.0);
    }
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) == t.end()) return t;
  }
}

std::vector<double> merge_points(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Eigen::VectorXd gather(const std::vector<double>& points, const Eigen::VectorXd& values,
                       const std::vector<double>& wanted) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(wanted.size()));
  for (std::size_t k = 0; k < wanted.size(); ++k) {
    const auto pos = std::lower_bound(points.begin(), points.end(), wanted[k]) - points.begin();
    out[static_cast<Eigen::Index>(k)] = values[pos];
  }
  return out;
}

}  // namespace

SimulatedData sample_dataset(const ProcessSpec& spec, const DesignSpec& design, const NoiseSpec& noise,
                             std::size_t N, std::uint64_t seed, const std::optional<EvalGrid>& latent_grid,
                             std::size_t workers) {
  spec.validate();
  design.validate();
  if (N < 1) throw ConfigurationError("simulation needs at least one curve");

  std::vector<double> grid;
  if (latent_grid) grid.assign(latent_grid->points().begin(), latent_grid->points().end());

  const bool common = design.kind == DesignKind::CommonEquidistant;
  std::vector<double> common_times;
  std::optional<LatentSampler> shared;
  if (common) {
    for (int m = 1; m <= design.m_mean; ++m)
      common_times.push_back(static_cast<double>(m) / static_cast<double>(design.m_mean + 1));
    shared.emplace(spec, merge_points(common_times, grid), 0);
  }

  const int m_lo = std::max(1, static_cast<int>(std::lround((1.0 - design.p_jitter) * design.m_mean)));
  const int m_hi = std::max(m_lo, static_cast<int>(std::lround((1.0 + design.p_jitter) * design.m_mean)));

  std::vector<std::optional<CurveObservations>> curves(N);
  std::vector<Eigen::VectorXd> latent(N);
  Eigen::MatrixXd on_grid(static_cast<Eigen::Index>(grid.empty() ? 0 : N), static_cast<Eigen::Index>(grid.size()));

  parallel_for(N, workers, [&](std::size_t i) {
    auto rng = curve_rng(seed, i);
    std::vector<double> times;
    Eigen::VectorXd x_all;
    std::vector<double> points;
    if (common) {
      times = common_times;
      x_all = shared->draw(rng);
      points = shared->points();
    } else {
      std::uniform_int_distribution<int> count(m_lo, m_hi);
      times = uniform_times(rng, count(rng));
      LatentSampler sampler(spec, merge_points(times, grid), i);
      x_all = sampler.draw(rng);
      points = sampler.points();
    }
    for (Eigen::Index k = 0; k < x_all.size(); ++k) x_all[k] += spec.mean(points[static_cast<std::size_t>(k)]);

    Eigen::VectorXd x_obs = gather(points, x_all, times);
    std::vector<double> y(times.size());
    std::normal_distribution<double> normal;
    for (std::size_t m = 0; m < times.size(); ++m) {
      const double x = x_obs[static_cast<Eigen::Index>(m)];
      double sd;
      try {
        sd = noise(times[m], x);
      } catch (const GenerationError&) {
        throw GenerationError("noise sd must be finite and nonnegative", i);
      }
      y[m] = sd > 0.0 ? x + sd * normal(rng) : x;
    }
    curves[i].emplace(static_cast<std::int64_t>(i + 1), std::move(times), std::move(y));
    latent[i] = std::move(x_obs);
    if (!grid.empty()) on_grid.row(static_cast<Eigen::Index>(i)) = gather(points, x_all, grid).transpose();
  });

  std::vector<CurveObservations> list;
  list.reserve(N);
  for (auto& c : curves) list.push_back(std::move(*c));
  SimulatedData out{FunctionalDataset(std::move(list), common ? Design::Common : Design::Independent),
                    std::move(latent), grid, std::move(on_grid), {}};
  if (!grid.empty()) {
    out.true_mean_grid.resize(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) out.true_mean_grid[static_cast<Eigen::Index>(k)] = spec.mean(grid[k]);
  }
  return out;
}

}  // namespace fdadapt
