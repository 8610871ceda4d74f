// Thin wrappers around Boost.Math distribution functions.
//
// Kept in one place so the rest of the code never includes Boost headers
// directly and so policies (no exceptions on edge cases we handle ourselves)
// stay consistent.
#pragma once

namespace robsur {

double normal_cdf(double z);
double normal_quantile(double p);       // inverse standard normal CDF
double chisq_cdf(double x, double df);
double chisq_upper(double x, double df);  // P(X > x)
double chisq_quantile(double p, double df);
double chi_cdf(double x, int m);        // CDF of the chi_m distribution
double chi_pdf(double x, int m);        // density of the chi_m distribution

}  // namespace robsur
