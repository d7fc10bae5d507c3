#pragma once

namespace steereval {

// Regularized incomplete beta I_x(a, b) via the standard continued fraction
// (modified Lentz), accurate enough for t-test p-values at any df we use.
double incomplete_beta(double a, double b, double x);

// Student-t CDF P(T <= t) with df degrees of freedom.
double student_t_cdf(double t, double df);

// Upper tail P(T >= t).
double student_t_sf(double t, double df);

}  // namespace steereval
