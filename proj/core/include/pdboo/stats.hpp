#pragma once

namespace pdboo {

/// Standard normal CDF, evaluated through erfc for full-range accuracy.
double normal_cdf(double x);

/// CDF of N(mu, sigma^2); sigma = 0 degenerates to a unit step at mu.
double normal_cdf(double x, double mu, double sigma);

/*!
 * Inverse standard normal CDF (quantile function), p in (0, 1).
 * Wichura's AS 241 (PPND16) rational approximations; absolute error
 * around 1e-15 over the full open interval. Throws on p outside (0, 1).
 */
double inverse_normal_cdf(double p);

/// Quantile of N(mu, sigma^2).
double inverse_normal_cdf(double p, double mu, double sigma);

/// Midpoint quantile level (2i+1)/(2n) for 0-based index i in [0, n).
double midpoint_level(int i, int n);

}  // namespace pdboo
