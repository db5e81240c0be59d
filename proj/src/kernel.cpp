#include "fdadapt/kernel.hpp"

#include <string>

#include "fdadapt/error.hpp"

namespace fdadapt {

const char* to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::Uniform:
      return "uniform";
    case KernelKind::Epanechnikov:
      return "epanechnikov";
    case KernelKind::Biweight:
      return "biweight";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "uniform") return KernelKind::Uniform;
  if (name == "epanechnikov") return KernelKind::Epanechnikov;
  if (name == "biweight") return KernelKind::Biweight;
  throw ArgumentError("unknown kernel '" + std::string(name) + "'");
}

double kernel_abs_moment(Kernel kernel, double a) {
  if (!(a >= 0.0)) throw ArgumentError("kernel moment exponent must be nonnegative");
  // 15{(a+1)⁻¹ − 2(a+3)⁻¹ + (a+5)⁻¹}/8 over a common denominator.
  if (kernel.kind == KernelKind::Biweight) return 15.0 / ((a + 1.0) * (a + 3.0) * (a + 5.0));

  // Symmetric integrand: integrate over [0,1] and double. |u|^a has a
  // derivative singularity at 0 for non-integer a, so the interval is split
  // geometrically towards the origin.
  const auto f = [&](double u) { return (u == 0.0 ? (a == 0.0 ? 1.0 : 0.0) : std::pow(u, a)) * kernel(u); };
  double total = 0.0;
  double hi = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double lo = 0.5 * hi;
    total += adaptive_simpson(f, lo, hi, 1e-14);
    hi = lo;
  }
  total += adaptive_simpson(f, 0.0, hi, 1e-14);
  return 2.0 * total;
}

}  // namespace fdadapt
