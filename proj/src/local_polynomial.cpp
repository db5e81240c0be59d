#include "fdadapt/local_polynomial.hpp"

#include <limits>
#include <string>

#include "fdadapt/error.hpp"

namespace fdadapt {

LpWeights lp_weights(const CurveObservations& curve, double t, double h, int order, Kernel kernel, int k0,
                     int derivative) {
  if (!(h > 0.0)) throw ArgumentError("bandwidth must be positive");
  if (order < 0 || order > max_lp_order)
    throw ArgumentError("local polynomial order must lie in [0, " + std::to_string(max_lp_order) + "]");
  if (derivative < 0 || derivative > order) throw ArgumentError("derivative must lie in [0, order]");
  if (k0 < order + 1) throw ArgumentError("k0 must be at least order + 1");

  LpWeights out;
  out.target_t = t;
  out.bandwidth = h;
  out.order = order;
  out.derivative = derivative;

  const auto [first, last] = curve.window(t, h);
  out.first = first;
  out.window_count = last - first;
  if (out.window_count < static_cast<std::size_t>(k0)) return out;

  const auto times = curve.times().subspan(first, out.window_count);
  out.degenerate = !solve_lp_system<double>(times, t, h, order, derivative, kernel, out.weights);
  if (out.degenerate) out.weights.resize(0);
  return out;
}

double nw_value(const CurveObservations& curve, double t, double h, Kernel kernel) {
  const auto [first, last] = curve.window(t, h);
  const auto times = curve.times();
  const auto values = curve.values();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t m = first; m < last; ++m) {
    const double k = kernel((times[m] - t) / h);
    num += k * values[m];
    den += k;
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

Eigen::VectorXd nw_presmooth(const CurveObservations& curve, std::span<const double> points, double h,
                             Kernel kernel) {
  if (!(h > 0.0)) throw ArgumentError("bandwidth must be positive");
  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t g = 0; g < points.size(); ++g) out[static_cast<Eigen::Index>(g)] = nw_value(curve, points[g], h, kernel);
  return out;
}

Eigen::VectorXd nw_presmooth(const CurveObservations& curve, const EvalGrid& grid, double h, Kernel kernel) {
  return nw_presmooth(curve, grid.points(), h, kernel);
}

}  // namespace fdadapt
