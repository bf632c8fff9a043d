#include "senc/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "senc/error.hpp"

namespace senc {

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;
const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

// Acklam's rational approximation to the standard normal quantile,
// accurate to ~1.15e-9 before refinement.
double icdf_estimate(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double gaussian_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / sqrt2); }

namespace {

// Refined quantile for p in (0, 0.5]; x <= 0 there, so the residual
// cdf(x) - p is evaluated in the lower tail at full relative precision.
double icdf_half(double p) {
  double x = icdf_estimate(p);
  double density = gaussian_pdf(x);
  if (density > 0.0) {
    double err = gaussian_cdf(x) - p;
    double u = err / density;
    x -= u / (1.0 + 0.5 * x * u);  // Halley step
  }
  return x;
}

}  // namespace

double gaussian_icdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw error("gaussian_icdf: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  // For p above one half, 1 - p is exact (Sterbenz), so reflect and keep
  // the well-conditioned branch.
  if (p > 0.5) return -icdf_half(1.0 - p);
  return icdf_half(p);
}

double gaussian_pdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw error("gaussian_pdf: sigma must be positive");
  return gaussian_pdf((x - mu) / sigma) / sigma;
}

double gaussian_cdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw error("gaussian_cdf: sigma must be positive");
  return gaussian_cdf((x - mu) / sigma);
}

double gaussian_icdf(double p, double mu, double sigma) {
  if (!(sigma > 0.0)) throw error("gaussian_icdf: sigma must be positive");
  return mu + sigma * gaussian_icdf(p);
}

}  // namespace senc
