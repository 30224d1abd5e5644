// Coagulation kernels. All families are symmetric and positive for integer
// sizes >= 1. Every separable family is expressed in the mirrored rank-2 form
//   K(x,y) = u(x)*v(y) + v(x)*u(y)
// which the exact-rate engine and the finite-difference solver exploit; the
// ballistic kernel has no such form and callers fall back to dense tables.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "aggfrag/errors.hpp"

namespace aggfrag {

enum class KernelFamily { Constant, Sum, Product, Ballistic, Generalized };

struct KernelSpec {
  KernelFamily family = KernelFamily::Constant;
  double amplitude = 1.0;
  double a = 0.0;  // exponent, Generalized only

  static KernelSpec constant(double amp = 1.0) { return {KernelFamily::Constant, amp, 0.0}; }
  static KernelSpec sum(double amp = 1.0) { return {KernelFamily::Sum, amp, 0.0}; }
  static KernelSpec product(double amp = 1.0) { return {KernelFamily::Product, amp, 0.0}; }
  static KernelSpec ballistic(double amp = 1.0) { return {KernelFamily::Ballistic, amp, 0.0}; }
  static KernelSpec generalized(double a, double amp = 1.0) {
    return {KernelFamily::Generalized, amp, a};
  }
};

inline const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Constant: return "constant";
    case KernelFamily::Sum: return "sum";
    case KernelFamily::Product: return "product";
    case KernelFamily::Ballistic: return "ballistic";
    case KernelFamily::Generalized: return "generalized";
  }
  return "?";
}

inline bool is_separable(KernelFamily f) { return f != KernelFamily::Ballistic; }

// Factor u of the mirrored form; x is the (real-valued) particle size.
inline double kernel_factor_u(const KernelSpec& k, double x) {
  switch (k.family) {
    case KernelFamily::Constant: return 0.5 * k.amplitude;
    case KernelFamily::Sum: return k.amplitude * x;
    case KernelFamily::Product: return 0.5 * k.amplitude * x;
    case KernelFamily::Generalized: return k.amplitude * std::pow(x, k.a);
    case KernelFamily::Ballistic: break;
  }
  throw std::domain_error("kernel_factor_u: ballistic kernel is not separable");
}

inline double kernel_factor_v(const KernelSpec& k, double x) {
  switch (k.family) {
    case KernelFamily::Constant: return 1.0;
    case KernelFamily::Sum: return 1.0;
    case KernelFamily::Product: return x;
    case KernelFamily::Generalized: return std::pow(x, -k.a);
    case KernelFamily::Ballistic: break;
  }
  throw std::domain_error("kernel_factor_v: ballistic kernel is not separable");
}

// K for real-valued sizes; used by the dense tables and the per-pair
// acceptance test. Exactly symmetric in floating point: commutative
// subexpressions only, and the generalized family canonicalizes x >= y.
inline double kernel_value(const KernelSpec& k, double x, double y) {
  switch (k.family) {
    case KernelFamily::Constant:
      return k.amplitude;
    case KernelFamily::Sum:
      return k.amplitude * (x + y);
    case KernelFamily::Product:
      return k.amplitude * (x * y);
    case KernelFamily::Ballistic: {
      const double c = std::cbrt(x) + std::cbrt(y);
      return k.amplitude * c * c * std::sqrt(1.0 / x + 1.0 / y);
    }
    case KernelFamily::Generalized: {
      if (x < y) std::swap(x, y);
      const double t = std::pow(x / y, k.a);
      return k.amplitude * (t + 1.0 / t);
    }
  }
  throw std::logic_error("kernel_value: bad family");
}

inline double evaluate(const KernelSpec& k, std::uint64_t i, std::uint64_t j) {
  if (i == 0 || j == 0)
    throw std::domain_error("kernel evaluate: sizes must be >= 1, got " +
                            std::to_string(i) + "," + std::to_string(j));
  return kernel_value(k, static_cast<double>(i), static_cast<double>(j));
}

// Upper bound of K over {1..max_size}^2. Constant in the interior arguments
// for fixed max_size, so the acceptance-rejection engine caches it and only
// refreshes when the maximum size grows. For the ballistic family the maximum
// sits at (1,M) for every M except tiny ones where the diagonal (M,M) wins,
// so take the larger of the two corners.
inline double majorant(const KernelSpec& k, std::uint64_t max_size) {
  if (max_size == 0) throw std::domain_error("majorant: max_size must be >= 1");
  const double m = static_cast<double>(max_size);
  switch (k.family) {
    case KernelFamily::Constant:
      return k.amplitude;
    case KernelFamily::Sum:
      return k.amplitude * 2.0 * m;
    case KernelFamily::Product:
      return k.amplitude * m * m;
    case KernelFamily::Ballistic:
      return std::max(kernel_value(k, 1.0, m), kernel_value(k, m, m));
    case KernelFamily::Generalized: {
      if (max_size == 1) return 2.0 * k.amplitude;
      const double t = std::pow(m, std::abs(k.a));
      return k.amplitude * (t + 1.0 / t);
    }
  }
  throw std::logic_error("majorant: bad family");
}

}  // namespace aggfrag
