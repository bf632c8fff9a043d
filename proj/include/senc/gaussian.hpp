#pragma once

namespace senc {

// Standard normal density, CDF, and inverse CDF.
double gaussian_pdf(double x);
double gaussian_cdf(double x);
// Rational approximation refined by one Halley step; p must lie in (0, 1).
double gaussian_icdf(double p);

double gaussian_pdf(double x, double mu, double sigma);
double gaussian_cdf(double x, double mu, double sigma);
double gaussian_icdf(double p, double mu, double sigma);

}  // namespace senc
