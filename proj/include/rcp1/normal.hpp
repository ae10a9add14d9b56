#pragma once

namespace rcp1 {

// Standard normal density, CDF and quantile.
//
// The CDF is evaluated through erfc so both tails keep full relative
// precision; absolute error is below 1e-15 on [-8, 8]. The quantile starts
// from a rational approximation and is polished with two Halley steps
// against the CDF, giving absolute error below 1e-14 for p in
// [1e-300, 1 - 1e-16]. Certificate correctness reduces to these two
// primitives, so they are tested against an independent series oracle.

double normal_pdf(double x);
double normal_cdf(double x);
// p in [0, 1]; returns -inf at 0 and +inf at 1, throws DomainError outside.
double normal_quantile(double p);

// N(0, sigma) variants, sigma > 0.
double normal_pdf(double x, double sigma);
double normal_cdf(double x, double sigma);
double normal_quantile(double p, double sigma);

}  // namespace rcp1
