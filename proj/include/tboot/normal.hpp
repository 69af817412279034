#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace tboot {

inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2Pi = 2.5066282746310005024;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Upper tail P(N > x), accurate far out where 1 - norm_cdf would cancel.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// P(a < N <= b) without catastrophic cancellation in either tail.
inline double norm_cdf_interval(double a, double b) {
  if (a >= b) return 0.0;
  if (a + b > 0.0) return norm_sf(a) - norm_sf(b);
  return norm_cdf(b) - norm_cdf(a);
}

// Inverse standard normal CDF: Acklam's rational approximation polished with
// one Halley step against erfc, giving close to full double precision.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p must be in (0,1)");
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = norm_cdf(x) - p;
  const double u = err * kSqrt2Pi * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Chi-square quantile with 2 degrees of freedom (exponential with mean 2).
inline double chi2_quantile_df2(double p) {
  if (!(p >= 0.0 && p < 1.0))
    throw std::domain_error("chi2_quantile_df2: p must be in [0,1)");
  return -2.0 * std::log1p(-p);
}

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double* value, double* error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double kronrod = 0.0;
  double gauss = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double offset = half * kKronrodNodes[i];
    const double fsum =
        (i == 7) ? f(center) : f(center - offset) + f(center + offset);
    kronrod += kKronrodWeights[i] * fsum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fsum;
  }
  *value = kronrod * half;
  const double diff = (kronrod - gauss) * half;
  *error = std::abs(diff);
}

template <typename F>
double integrate_rec(const F& f, double a, double b, double tol, int depth) {
  double value, error;
  gk15(f, a, b, &value, &error);
  if (error <= tol || depth >= 48) return value;
  const double mid = 0.5 * (a + b);
  return integrate_rec(f, a, mid, 0.5 * tol, depth + 1) +
         integrate_rec(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a, b] to absolute tolerance.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-12) {
  if (!(b > a)) return 0.0;
  // Seed the subdivision with a few panels so narrow features are not missed.
  const int panels = 8;
  const double step = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    total += detail::integrate_rec(f, a + i * step, a + (i + 1) * step,
                                   abs_tol / panels, 0);
  }
  return total;
}

}  // namespace tboot
