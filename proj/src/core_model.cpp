#include "fdadapt/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "fdadapt/csv.hpp"
#include "fdadapt/error.hpp"

namespace fdadapt {

const char* to_string(Design design) noexcept {
  return design == Design::Common ? "common" : "independent";
}

CurveObservations::CurveObservations(std::int64_t id, std::vector<double> times, std::vector<double> values)
    : id_(id), times_(std::move(times)), values_(std::move(values)) {
  const std::string where = "curve " + std::to_string(id_);
  if (times_.empty()) throw ArgumentError(where + ": no observations");
  if (times_.size() != values_.size()) throw ArgumentError(where + ": times and values differ in length");
  for (std::size_t m = 0; m < times_.size(); ++m) {
    const double t = times_[m];
    if (!(t > 0.0 && t < 1.0)) throw DomainError(where + ": time " + csv::format_number(t) + " outside (0,1)");
    if (!std::isfinite(values_[m])) throw ArgumentError(where + ": non-finite value");
    if (m > 0 && !(times_[m - 1] < t)) {
      if (times_[m - 1] == t) throw ArgumentError(where + ": duplicate time " + csv::format_number(t));
      throw ArgumentError(where + ": times not strictly increasing");
    }
  }
}

std::pair<std::size_t, std::size_t> CurveObservations::window(double t, double h) const noexcept {
  const auto first = std::lower_bound(times_.begin(), times_.end(), t - h);
  const auto last = std::upper_bound(first, times_.end(), t + h);
  return {static_cast<std::size_t>(first - times_.begin()), static_cast<std::size_t>(last - times_.begin())};
}

namespace {

bool all_times_identical(std::span<const CurveObservations> curves) {
  const auto reference = curves.front().times();
  return std::all_of(curves.begin() + 1, curves.end(), [&](const CurveObservations& c) {
    const auto t = c.times();
    return t.size() == reference.size() && std::equal(t.begin(), t.end(), reference.begin());
  });
}

double average_size(std::span<const CurveObservations> curves) {
  double total = 0.0;
  for (const auto& c : curves) total += static_cast<double>(c.size());
  return total / static_cast<double>(curves.size());
}

}  // namespace

FunctionalDataset::FunctionalDataset(std::vector<CurveObservations> curves, DomainTransform transform)
    : curves_(std::move(curves)), design_(Design::Independent), m_hat_(0.0), transform_(transform) {
  if (curves_.size() < 2) throw ArgumentError("a functional dataset needs at least 2 curves");
  design_ = all_times_identical(curves_) ? Design::Common : Design::Independent;
  m_hat_ = average_size(curves_);
}

FunctionalDataset::FunctionalDataset(std::vector<CurveObservations> curves, Design design, DomainTransform transform)
    : curves_(std::move(curves)), design_(design), m_hat_(0.0), transform_(transform) {
  if (curves_.size() < 2) throw ArgumentError("a functional dataset needs at least 2 curves");
  if (design_ == Design::Common && !all_times_identical(curves_))
    throw ArgumentError("common design requires identical observation times");
  m_hat_ = average_size(curves_);
}

FunctionalDataset FunctionalDataset::affine_values(double a, double b) const {
  std::vector<CurveObservations> out;
  out.reserve(curves_.size());
  for (const auto& c : curves_) {
    std::vector<double> v(c.values().begin(), c.values().end());
    for (auto& y : v) y = a * y + b;
    out.emplace_back(c.id(), std::vector<double>(c.times().begin(), c.times().end()), std::move(v));
  }
  return FunctionalDataset(std::move(out), design_, transform_);
}

double mean_obs_count(const FunctionalDataset& dataset) noexcept { return dataset.m_hat(); }

EvalGrid::EvalGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ArgumentError("an evaluation grid needs at least 2 points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i] >= 0.0 && points_[i] <= 1.0)) throw DomainError("grid point outside [0,1]");
    if (i > 0 && !(points_[i - 1] < points_[i])) throw ArgumentError("grid points must be strictly increasing");
  }
}

EvalGrid EvalGrid::uniform(double lo, double hi, std::size_t count) {
  if (count < 2) throw ArgumentError("an evaluation grid needs at least 2 points");
  if (!(lo < hi)) throw ArgumentError("grid bounds must satisfy lo < hi");
  std::vector<double> points(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) points[i] = lo + step * static_cast<double>(i);
  points.back() = hi;
  EvalGrid grid(std::move(points));
  grid.uniform_ = true;
  return grid;
}

FunctionalDataset parse_long_csv(std::istream& in, const IngestOptions& options) {
  DomainTransform transform;
  if (options.rescale_from) {
    const auto [lo, hi] = *options.rescale_from;
    if (!(lo < hi)) throw ArgumentError("rescale interval must satisfy lo < hi");
    transform = {lo, hi - lo};
  }

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::map<long long, std::vector<std::pair<double, double>>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      const auto names = csv::split(body);
      if (names.size() == 3 && csv::trim(names[0]) == "curve_id" && csv::trim(names[1]) == "t" &&
          csv::trim(names[2]) == "y")
        continue;
      throw ParseError("expected header 'curve_id,t,y'", line_no);
    }
    const auto fields = csv::split(body);
    if (fields.size() != 3) throw ParseError("expected 3 fields, got " + std::to_string(fields.size()), line_no);
    const auto id = csv::parse_integer(fields[0]);
    const auto t = csv::parse_double(fields[1]);
    const auto y = csv::parse_double(fields[2]);
    if (!id) throw ParseError("malformed curve_id", line_no);
    if (!t) throw ParseError("malformed time", line_no);
    if (!y) throw ParseError("malformed value", line_no);
    if (!std::isfinite(*y)) throw ParseError("non-finite value", line_no);
    if (!std::isfinite(*t)) throw ParseError("non-finite time", line_no);
    const double internal = transform.to_internal(*t);
    if (!(internal > 0.0 && internal < 1.0))
      throw DomainError("line " + std::to_string(line_no) + ": time " + csv::format_number(*t) + " outside (0,1)");
    rows[*id].emplace_back(internal, *y);
  }
  if (rows.empty()) throw EmptyDatasetError("no observations in input");

  std::vector<CurveObservations> curves;
  curves.reserve(rows.size());
  for (auto& [id, obs] : rows) {
    std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> times(obs.size()), values(obs.size());
    for (std::size_t m = 0; m < obs.size(); ++m) std::tie(times[m], values[m]) = obs[m];
    curves.emplace_back(id, std::move(times), std::move(values));
  }
  return FunctionalDataset(std::move(curves), transform);
}

FunctionalDataset ingest_long_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return parse_long_csv(in, options);
}

void write_long_csv(std::ostream& out, const FunctionalDataset& dataset) {
  const auto& transform = dataset.transform();
  csv::RowWriter row(out);
  out << "curve_id,t,y\n";
  for (const auto& c : dataset.curves()) {
    for (std::size_t m = 0; m < c.size(); ++m) {
      row << static_cast<long long>(c.id()) << transform.to_raw(c.times()[m]) << c.values()[m];
      row.end();
    }
  }
}

void write_long_csv(const std::filesystem::path& path, const FunctionalDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path.string());
  write_long_csv(out, dataset);
}

}  // namespace fdadapt
