#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace latticefwe::rft {

enum class FieldFamily { Gaussian, StudentT };

// Statistical field family; nu is the t degrees of freedom (unused for
// Gaussian). The 3D EC density of a t-field needs nu > 1.
struct FieldSpec {
  FieldFamily family = FieldFamily::Gaussian;
  double nu = 0.0;

  static FieldSpec gaussian() { return {FieldFamily::Gaussian, 0.0}; }
  static FieldSpec student_t(double nu);
};

// Search region on a sampling lattice: voxel dimensions (mm), search
// volume (mm^3) and smoothness FWHM per axis (mm). Units only need to be
// mutually consistent; voxels work as well as mm.
struct LatticeSpec {
  std::array<double, 3> voxel_mm{3.0, 3.0, 3.0};
  double volume_mm3 = 1.4e6;
  std::array<double, 3> fwhm_mm{6.0, 6.0, 6.0};

  void validate() const;
  // FWHM / voxel size per axis.
  std::array<double, 3> smoothness_ratio() const;
};

// Resel counts per dimension, in resel units.
struct ReselVector {
  double r0 = 0, r1 = 0, r2 = 0, r3 = 0;
};

// Volume / (FWHMx FWHMy FWHMz), the large-unmasked-volume simplification:
// only the 3D component is kept.
ReselVector resel_count_simplified(const LatticeSpec& spec);

// Full resel vector of a cuboid with the given extents in resel units:
// (1, a+b+c, ab+bc+ca, abc).
ReselVector resel_count_cuboid(const std::array<double, 3>& extent_resels);

// EC density rho_d(t) of the field, d in 0..3, in resel^-d units.
double ec_density(int d, double t, const FieldSpec& field);

// E[EC] = sum_d R_d * rho_d(t).
double expected_ec(double t, const ReselVector& resels, const FieldSpec& field);

class ThresholdError : public std::runtime_error {
 public:
  enum class Kind {
    unattainable,  // max_t E[EC] < alpha: search region too small for alpha
    no_bracket,    // root lies beyond the search ceiling t_max
  };

  ThresholdError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Smallest t on the decreasing branch of E[EC] with E[EC](t) = alpha,
// |E[EC] - alpha| <= 1e-10 at exit. The maximum of E[EC] is located on a
// coarse grid first; the root is then bisected on [argmax, t_max=100].
// Throws ThresholdError (unattainable / no_bracket).
double rft_threshold(double alpha, const ReselVector& resels, const FieldSpec& field);

}  // namespace latticefwe::rft
