#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "latticefwe/rft.hpp"

namespace latticefwe::fieldsim {

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 30;  // 1 GiB

// Dense scalar field, x fastest: index = x + dims[0]*(y + dims[1]*z).
struct Lattice {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> data;

  static Lattice zeros(const std::array<int, 3>& dims);
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
  }
  double& at(int x, int y, int z) { return data[index(x, y, z)]; }
  double at(int x, int y, int z) const { return data[index(x, y, z)]; }
  double max_value() const;
};

struct SimConfig {
  std::array<int, 3> dims{32, 32, 32};
  std::array<double, 3> fwhm_vox{0, 0, 0};
  rft::FieldSpec field = rft::FieldSpec::gaussian();
  int n_realizations = 1;
  std::uint64_t master_seed = 0;
  std::size_t memory_budget_bytes = kDefaultMemoryBudget;
  void validate() const;
};

struct FweEstimate {
  std::int64_t rejections = 0;
  std::int64_t trials = 0;
  double rate = 0;
  double ci_low = 0;
  double ci_high = 0;
};

// Seed stream: with mix(z) the SplitMix64 finalizer,
//   derive_seed(master, r, f) = mix(mix(mix(master) ^ r) ^ f)
// realization r of a simulation uses field seeds derive_seed(master, r, f),
// f = 0 for a Gaussian field and f = 0..nu for the nu+1 t-field components.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t realization,
                          std::uint64_t field_index);
std::uint64_t realization_seed(std::uint64_t master_seed, std::uint64_t realization);

// Unit-variance smooth Gaussian field: white noise on a lattice padded by
// ceil(3 sigma) per side, separable truncated Gaussian kernel normalized to
// unit L2 norm per axis, cropped back to dims. fwhm 0 means raw white noise.
Lattice generate_smooth_field(const std::array<int, 3>& dims,
                              const std::array<double, 3>& fwhm_vox, std::uint64_t seed,
                              std::size_t memory_budget_bytes = kDefaultMemoryBudget);

// One-sample t statistic across component fields: mean/(sd/sqrt(n)), sd with
// divide-by-(n-1). Exposed separately so odd symmetry is testable.
Lattice one_sample_t_field(std::span<const Lattice> components);

// Marginally Student-t field with nu df from nu+1 smooth unit fields, seeded
// mix(seed ^ f) per component f.
Lattice generate_t_field(const std::array<int, 3>& dims, const std::array<double, 3>& fwhm_vox,
                         double nu, std::uint64_t seed,
                         std::size_t memory_budget_bytes = kDefaultMemoryBudget);

// Gradient-variance smoothness estimator: sqrt(4 ln 2 / var(forward diff)).
double estimate_fwhm(const Lattice& field, int axis);

std::pair<double, double> wilson_interval(std::int64_t successes, std::int64_t trials);

FweEstimate empirical_fwe(const SimConfig& config, double threshold);
// Shares the per-realization maxima across thresholds (paired comparison).
std::vector<FweEstimate> empirical_fwe(const SimConfig& config,
                                       std::span<const double> thresholds);

// header: trials,rejections,rate,ci_low,ci_high,threshold,dims,fwhm_vox,family,nu,master_seed
void write_sim_csv(std::ostream& out, const SimConfig& config,
                   std::span<const double> thresholds, std::span<const FweEstimate> estimates);

}  // namespace latticefwe::fieldsim
