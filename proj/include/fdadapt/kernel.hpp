#pragma once

#include <cmath>
#include <string_view>

namespace fdadapt {

enum class KernelKind { Uniform, Epanechnikov, Biweight };

/// Symmetric kernel supported on [-1, 1] and integrating to one.
struct Kernel {
  KernelKind kind = KernelKind::Biweight;

  template <typename Scalar>
  Scalar operator()(Scalar u) const noexcept {
    const Scalar a = std::abs(u);
    if (a > Scalar(1)) return Scalar(0);
    switch (kind) {
      case KernelKind::Uniform:
        return Scalar(0.5);
      case KernelKind::Epanechnikov:
        return Scalar(0.75) * (Scalar(1) - u * u);
      case KernelKind::Biweight: {
        const Scalar v = Scalar(1) - u * u;
        return Scalar(15) / Scalar(16) * v * v;
      }
    }
    return Scalar(0);
  }

  friend bool operator==(Kernel, Kernel) = default;
};

inline constexpr Kernel uniform_kernel{KernelKind::Uniform};
inline constexpr Kernel epanechnikov_kernel{KernelKind::Epanechnikov};
inline constexpr Kernel biweight_kernel{KernelKind::Biweight};

const char* to_string(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(std::string_view name);

/// ∫ |u|^a K(u) du. Closed form for the biweight, adaptive Simpson otherwise.
double kernel_abs_moment(Kernel kernel, double a);

/// Adaptive Simpson quadrature on [lo, hi] to the given tolerance.
template <typename F>
double adaptive_simpson(F&& f, double lo, double hi, double tolerance, int max_depth = 50);

namespace detail {

template <typename F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double adaptive_simpson(F&& f, double lo, double hi, double tolerance, int max_depth) {
  const double fa = f(lo);
  const double fb = f(hi);
  const double fm = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, lo, hi, fa, fm, fb, whole, tolerance, max_depth);
}

}  // namespace fdadapt
