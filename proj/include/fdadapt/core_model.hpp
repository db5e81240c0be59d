#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fdadapt {

enum class Design { Independent, Common };

const char* to_string(Design design) noexcept;

/// Noisy discrete observations of one curve on the open domain (0,1).
///
/// Times are strictly increasing and values finite; both are checked on
/// construction and never change afterwards.
class CurveObservations {
 public:
  CurveObservations(std::int64_t id, std::vector<double> times, std::vector<double> values);

  std::int64_t id() const noexcept { return id_; }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return times_.size(); }

  /// Half-open index range [first, last) of the times inside [t - h, t + h].
  std::pair<std::size_t, std::size_t> window(double t, double h) const noexcept;

  friend bool operator==(const CurveObservations&, const CurveObservations&) = default;

 private:
  std::int64_t id_;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Affine map applied at ingestion, t_internal = (t_raw - offset) / scale.
struct DomainTransform {
  double offset = 0.0;
  double scale = 1.0;

  double to_internal(double t) const noexcept { return (t - offset) / scale; }
  double to_raw(double t) const noexcept { return offset + scale * t; }
  bool is_identity() const noexcept { return offset == 0.0 && scale == 1.0; }

  friend bool operator==(const DomainTransform&, const DomainTransform&) = default;
};

class FunctionalDataset {
 public:
  /// Detects the design: Common iff every curve carries a bitwise identical
  /// time vector.
  explicit FunctionalDataset(std::vector<CurveObservations> curves,
                             DomainTransform transform = {});

  /// Uses the given design; Common is validated against the times.
  FunctionalDataset(std::vector<CurveObservations> curves, Design design,
                    DomainTransform transform = {});

  std::span<const CurveObservations> curves() const noexcept { return curves_; }
  const CurveObservations& curve(std::size_t i) const { return curves_.at(i); }
  std::size_t size() const noexcept { return curves_.size(); }
  Design design() const noexcept { return design_; }
  double m_hat() const noexcept { return m_hat_; }
  const DomainTransform& transform() const noexcept { return transform_; }

  /// Same curves with values replaced by a * y + b.
  FunctionalDataset affine_values(double a, double b) const;

  friend bool operator==(const FunctionalDataset&, const FunctionalDataset&) = default;

 private:
  std::vector<CurveObservations> curves_;
  Design design_;
  double m_hat_;
  DomainTransform transform_;
};

/// Arithmetic mean of the per-curve observation counts.
double mean_obs_count(const FunctionalDataset& dataset) noexcept;

/// Sorted evaluation points inside [0,1].
class EvalGrid {
 public:
  explicit EvalGrid(std::vector<double> points);

  static EvalGrid uniform(double lo, double hi, std::size_t count);

  std::span<const double> points() const noexcept { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const noexcept { return points_.size(); }
  double lo() const noexcept { return points_.front(); }
  double hi() const noexcept { return points_.back(); }
  bool is_uniform() const noexcept { return uniform_; }
  Eigen::Map<const Eigen::VectorXd> as_vector() const noexcept {
    return {points_.data(), static_cast<Eigen::Index>(points_.size())};
  }

  friend bool operator==(const EvalGrid&, const EvalGrid&) = default;

 private:
  std::vector<double> points_;
  bool uniform_ = false;
};

struct IngestOptions {
  /// When set, raw times in [lo, hi] are mapped affinely onto the unit
  /// interval before validation.
  std::optional<std::pair<double, double>> rescale_from;
};

/// Reads `curve_id,t,y` long-format CSV.
FunctionalDataset ingest_long_csv(const std::filesystem::path& path, const IngestOptions& options = {});
FunctionalDataset parse_long_csv(std::istream& in, const IngestOptions& options = {});

/// Writes `curve_id,t,y` with shortest round-trip number formatting.
void write_long_csv(std::ostream& out, const FunctionalDataset& dataset);
void write_long_csv(const std::filesystem::path& path, const FunctionalDataset& dataset);

}  // namespace fdadapt
