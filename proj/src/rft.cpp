#include "latticefwe/rft.hpp"

#include <cmath>

#include "latticefwe/stats.hpp"

namespace latticefwe::rft {

namespace {

const double kLn4Ln2 = std::log(4.0 * std::log(2.0));  // ln(4 ln 2)
const double kTwoPi = 2.0 * M_PI;

// (4 ln 2)^(d/2) / (2 pi)^((d+1)/2), the kernel-width prefactor of rho_d.
double prefactor(int d) {
  return std::exp(0.5 * d * kLn4Ln2 - 0.5 * (d + 1) * std::log(kTwoPi));
}

// (1 + t^2/nu)^(-(nu-1)/2), the t-field power term; e^(-t^2/2) in the
// Gaussian (nu -> inf) limit.
double power_term(double t, const FieldSpec& f) {
  if (f.family == FieldFamily::Gaussian) return std::exp(-0.5 * t * t);
  return std::exp(-0.5 * (f.nu - 1.0) * std::log1p(t * t / f.nu));
}

}  // namespace

FieldSpec FieldSpec::student_t(double nu) {
  if (!(nu > 0.0)) throw std::domain_error("FieldSpec: StudentT requires nu > 0");
  return {FieldFamily::StudentT, nu};
}

void LatticeSpec::validate() const {
  for (double v : voxel_mm)
    if (!(v > 0.0)) throw std::domain_error("LatticeSpec: voxel dimensions must be > 0");
  if (!(volume_mm3 > 0.0)) throw std::domain_error("LatticeSpec: volume must be > 0");
  for (double f : fwhm_mm)
    if (!(f > 0.0)) throw std::domain_error("LatticeSpec: FWHM must be > 0");
}

std::array<double, 3> LatticeSpec::smoothness_ratio() const {
  validate();
  return {fwhm_mm[0] / voxel_mm[0], fwhm_mm[1] / voxel_mm[1], fwhm_mm[2] / voxel_mm[2]};
}

ReselVector resel_count_simplified(const LatticeSpec& spec) {
  spec.validate();
  ReselVector r;
  r.r3 = spec.volume_mm3 / (spec.fwhm_mm[0] * spec.fwhm_mm[1] * spec.fwhm_mm[2]);
  return r;
}

ReselVector resel_count_cuboid(const std::array<double, 3>& e) {
  for (double x : e)
    if (!(x > 0.0)) throw std::domain_error("resel_count_cuboid: extents must be > 0");
  ReselVector r;
  r.r0 = 1.0;
  r.r1 = e[0] + e[1] + e[2];
  r.r2 = e[0] * e[1] + e[1] * e[2] + e[2] * e[0];
  r.r3 = e[0] * e[1] * e[2];
  return r;
}

double ec_density(int d, double t, const FieldSpec& field) {
  if (d < 0 || d > 3) throw std::domain_error("ec_density: d must be in 0..3");
  const bool gaussian = field.family == FieldFamily::Gaussian;
  if (!gaussian && !(field.nu > 0.0))
    throw std::domain_error("ec_density: StudentT requires nu > 0");
  switch (d) {
    case 0:
      return gaussian ? stats::normal_tail(t) : stats::t_tail(t, field.nu);
    case 1:
      return prefactor(1) * power_term(t, field);
    case 2: {
      // Gamma((nu+1)/2) / ((nu/2)^(1/2) Gamma(nu/2)) -> 1 as nu -> inf.
      double coeff = 1.0;
      if (!gaussian) {
        const double nu = field.nu;
        coeff = std::exp(stats::log_gamma(0.5 * (nu + 1.0)) - stats::log_gamma(0.5 * nu) -
                         0.5 * std::log(0.5 * nu));
      }
      return prefactor(2) * coeff * t * power_term(t, field);
    }
    default: {
      double quad;  // (nu-1) t^2 / nu - 1, or t^2 - 1 in the limit
      if (gaussian) {
        quad = t * t - 1.0;
      } else {
        if (!(field.nu > 1.0))
          throw std::domain_error("ec_density: rho3 of a t-field requires nu > 1");
        quad = (field.nu - 1.0) * t * t / field.nu - 1.0;
      }
      return prefactor(3) * quad * power_term(t, field);
    }
  }
}

double expected_ec(double t, const ReselVector& resels, const FieldSpec& field) {
  if (resels.r0 < 0 || resels.r1 < 0 || resels.r2 < 0 || resels.r3 < 0)
    throw std::domain_error("expected_ec: resel counts must be >= 0");
  double e = 0.0;
  // Zero components are skipped so the simplified vector never touches the
  // tail probability evaluation.
  if (resels.r0 != 0) e += resels.r0 * ec_density(0, t, field);
  if (resels.r1 != 0) e += resels.r1 * ec_density(1, t, field);
  if (resels.r2 != 0) e += resels.r2 * ec_density(2, t, field);
  if (resels.r3 != 0) e += resels.r3 * ec_density(3, t, field);
  return e;
}

double rft_threshold(double alpha, const ReselVector& resels, const FieldSpec& field) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("rft_threshold: requires 0 < alpha < 1");
  if (!(resels.r3 > 0.0)) throw std::domain_error("rft_threshold: requires r3 > 0");

  constexpr double kTMax = 100.0;
  constexpr double kGridStep = 0.1;
  const auto e_of = [&](double t) { return expected_ec(t, resels, field); };

  // Locate the maximum of E[EC] on a coarse grid over [0, t_max]. rho3 is
  // negative near t = 0, so the peak is interior.
  double t_peak = 0.0;
  double e_peak = e_of(0.0);
  const int n = static_cast<int>(kTMax / kGridStep);
  for (int i = 1; i <= n; ++i) {
    const double t = i * kGridStep;
    const double e = e_of(t);
    if (e > e_peak) {
      e_peak = e;
      t_peak = t;
    }
  }
  if (e_peak < alpha)
    throw ThresholdError(ThresholdError::Kind::unattainable,
                         "rft_threshold: max E[EC] below alpha; search region too small");
  if (e_of(kTMax) >= alpha)
    throw ThresholdError(ThresholdError::Kind::no_bracket,
                         "rft_threshold: root above t_max = 100");

  // Bisect the decreasing branch.
  double lo = t_peak, hi = kTMax;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double e = e_of(mid);
    if (std::fabs(e - alpha) <= 1e-10 && hi - lo <= 1e-9) return mid;
    if (e > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace latticefwe::rft
