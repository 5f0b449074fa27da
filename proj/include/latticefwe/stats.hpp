#pragma once

#include <span>

namespace latticefwe::stats {

// ln Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

// Regularized incomplete beta I_x(a,b), a,b > 0, x in [0,1].
// Continued fraction (modified Lentz), switching to 1 - I_{1-x}(b,a)
// when x is past the convergence pivot (a+1)/(a+b+2).
double regularized_incomplete_beta(double a, double b, double x);

// Upper tail P(T >= t) of Student t with nu > 0 degrees of freedom.
double t_tail(double t, double nu);

// Inverse of t_tail in t: returns t with t_tail(t, nu) = p, 0 < p < 1.
double t_quantile(double p, double nu);

// Standard normal CDF, upper tail and quantile.
double normal_cdf(double z);
double normal_tail(double z);
double normal_quantile(double p);

struct WelchResult {
  double t = 0;
  double df = 0;
  double p_two_sided = 1;
  double effect_r = 0;  // r = sqrt(t^2 / (t^2 + df))
};

// Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
// Requires >= 2 elements per sample and nonzero variance in at least one.
WelchResult welch_t_test(std::span<const double> sample_a,
                         std::span<const double> sample_b);

}  // namespace latticefwe::stats
