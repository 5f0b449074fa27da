#include "latticefwe/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace latticefwe::stats {

namespace {

constexpr int kBetaMaxIter = 5000;
constexpr double kBetaEps = 1e-16;
constexpr double kFpMin = 1e-300;

// Continued fraction for I_x(a,b), valid for x < (a+1)/(a+b+2).
// Modified Lentz algorithm.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= kBetaEps) return h;
  }
  throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
}

double mean_of(std::span<const double> xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs, double mean) {
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
  return std::lgamma(x);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("regularized_incomplete_beta: requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("regularized_incomplete_beta: requires 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // Prefactor x^a (1-x)^b / (a B(a,b)), kept in log space.
  const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_tail(double t, double nu) {
  if (!(nu > 0.0)) throw std::domain_error("t_tail: requires nu > 0");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  // P(T >= t) = I_{nu/(nu+t^2)}(nu/2, 1/2) / 2 for t >= 0.
  const double x = nu / (nu + t * t);
  const double half_ib = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, x);
  return t > 0 ? half_ib : 1.0 - half_ib;
}

namespace {

// Bracketed inverse: find t with f(t) = p for a strictly decreasing tail
// function f. Bisection to a tight t interval, then secant polish.
template <typename F>
double invert_decreasing_tail(const F& f, double p, double lo, double hi) {
  double flo = f(lo) - p;  // >= 0
  double fhi = f(hi) - p;  // <= 0
  if (flo < 0 || fhi > 0) throw std::runtime_error("invert_decreasing_tail: bad bracket");
  double a = lo, b = hi, fa = flo, fb = fhi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (a + b);
    if (b - a <= 1e-13 * std::max(1.0, std::fabs(mid))) break;
    const double fm = f(mid) - p;
    if (fm == 0.0) return mid;
    if (fm > 0) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
  }
  // Secant refinement inside the final bracket.
  double t = 0.5 * (a + b);
  if (fa != fb) {
    const double s = a - fa * (b - a) / (fb - fa);
    if (s > a && s < b) t = s;
  }
  return t;
}

}  // namespace

double t_quantile(double p, double nu) {
  if (!(nu > 0.0)) throw std::domain_error("t_quantile: requires nu > 0");
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("t_quantile: requires 0 < p < 1");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -t_quantile(1.0 - p, nu);
  // Expand an upper bracket; tails can be very fat for small nu.
  double hi = 1.0;
  while (t_tail(hi, nu) > p) {
    hi *= 2.0;
    if (hi > 1e300) throw std::runtime_error("t_quantile: bracket expansion failed");
  }
  return invert_decreasing_tail([nu](double t) { return t_tail(t, nu); }, p, 0.0, hi);
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_tail(double z) {
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: requires 0 < p < 1");
  if (p == 0.5) return 0.0;
  // Solve on the upper tail for accuracy, reflect for p < 1/2.
  if (p > 0.5) return invert_decreasing_tail(normal_tail, 1.0 - p, 0.0, 40.0);
  return -invert_decreasing_tail(normal_tail, p, 0.0, 40.0);
}

WelchResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2)
    throw std::invalid_argument("welch_t_test: each sample needs >= 2 elements");
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  const double ma = mean_of(sample_a);
  const double mb = mean_of(sample_b);
  const double va = sample_variance(sample_a, ma);
  const double vb = sample_variance(sample_b, mb);
  if (va == 0.0 && vb == 0.0)
    throw std::invalid_argument("welch_t_test: both samples have zero variance");
  const double qa = va / na;
  const double qb = vb / nb;
  const double se = std::sqrt(qa + qb);
  WelchResult r;
  r.t = (ma - mb) / se;
  r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p_two_sided = r.t == 0.0 ? 1.0 : 2.0 * t_tail(std::fabs(r.t), r.df);
  r.effect_r = std::sqrt(r.t * r.t / (r.t * r.t + r.df));
  return r;
}

}  // namespace latticefwe::stats
