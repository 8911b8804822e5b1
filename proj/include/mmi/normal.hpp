#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace mmi {

// Standard normal distribution helpers. All are templated on the scalar so the
// analytic routines can be instantiated for long double when a test needs the
// extra headroom.

template <typename Scalar>
Scalar normal_pdf(Scalar x) {
  using std::exp;
  const Scalar inv_sqrt_2pi = Scalar(0.398942280401432677939946059934381868L);
  return inv_sqrt_2pi * exp(Scalar(-0.5) * x * x);
}

/// Phi(x) through erfc, which keeps full relative precision in the lower tail.
template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  using std::erfc;
  const Scalar inv_sqrt2 = Scalar(0.707106781186547524400844362104849039L);
  return Scalar(0.5) * erfc(-x * inv_sqrt2);
}

/// 1 - Phi(x) without cancellation.
template <typename Scalar>
Scalar normal_sf(Scalar x) {
  return normal_cdf(-x);
}

/// log Phi(x); uses log1p of the upper tail for positive x.
template <typename Scalar>
Scalar log_normal_cdf(Scalar x) {
  using std::log;
  using std::log1p;
  if (x < Scalar(0)) {
    const Scalar c = normal_cdf(x);
    if (c > Scalar(0)) return log(c);
    // erfc underflowed (x < -38): asymptotic Mills ratio expansion.
    const Scalar x2 = x * x;
    return Scalar(-0.5) * x2 - log(-x) - Scalar(0.918938533204672741780329736405617640L) +
           log1p(-Scalar(1) / x2 + Scalar(3) / (x2 * x2));
  }
  return log1p(-normal_sf(x));
}

namespace detail {

// Acklam's rational approximation to the normal quantile (relative error
// below 1.15e-9 on (0,1)), valid for 0 < p <= 0.5.
template <typename Scalar>
Scalar acklam_lower_quantile(Scalar p) {
  using std::log;
  using std::sqrt;
  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                          1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                          6.680131188771972e+01, -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                          -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                          3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < Scalar(p_low)) {
    const Scalar q = sqrt(Scalar(-2) * log(p));
    return (((((Scalar(c[0]) * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((Scalar(d[0]) * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const Scalar q = p - Scalar(0.5);
  const Scalar r = q * q;
  return (((((Scalar(a[0]) * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((Scalar(b[0]) * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace detail

/// Phi^{-1}(p): Acklam's approximation followed by one Halley step against
/// erfc, which brings the absolute error below 1e-12 over [1e-300, 1 - 1e-16].
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
  using std::exp;
  using std::sqrt;
  if (!(p > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
  if (!(p < Scalar(1))) return std::numeric_limits<Scalar>::infinity();
  if (p > Scalar(0.5)) return -normal_quantile(Scalar(1) - p);
  Scalar x = detail::acklam_lower_quantile(p);
  const Scalar e = normal_cdf(x) - p;
  const Scalar sqrt_2pi = Scalar(2.50662827463100050241576528481104525L);
  const Scalar u = e * sqrt_2pi * exp(Scalar(0.5) * x * x);
  x = x - u / (Scalar(1) + Scalar(0.5) * x * u);
  return x;
}

/// Phi^{-1}(1 - a), evaluated as -Phi^{-1}(a) so tiny tail levels keep precision.
template <typename Scalar>
Scalar normal_upper_quantile(Scalar a) {
  return -normal_quantile(a);
}

}  // namespace mmi
