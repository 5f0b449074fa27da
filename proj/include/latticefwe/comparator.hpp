#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "latticefwe/rft.hpp"

namespace latticefwe::comparator {

// Both corrected thresholds for one lattice configuration. rft_valid is
// t_rft <= t_bonferroni by construction, never stored independently.
struct ThresholdPair {
  double t_rft = 0;
  double t_bonferroni = 0;
  bool rft_valid() const { return t_rft <= t_bonferroni; }
};

// One cell of the voxel x df x ratio grid. rft_error marks cells where the
// RFT solver reported unattainable/no_bracket; t_rft is NaN there.
struct SweepCell {
  double voxel_mm = 0;
  double nu = 0;
  double smoothness_ratio = 0;
  ThresholdPair pair;
  bool rft_error = false;
};

// Inclusive start:end[:step] range. values() counts with a relative guard so
// e.g. 1:6:0.1 yields exactly 51 values despite binary step error.
struct Range {
  double start = 0;
  double end = 0;
  double step = 1;
  std::vector<double> values() const;
};

std::int64_t voxel_count(double volume_mm3, const std::array<double, 3>& voxel_mm);

double bonferroni_threshold(double alpha, std::int64_t n_tests, const rft::FieldSpec& field);

ThresholdPair compare_thresholds(double alpha, const rft::LatticeSpec& lattice,
                                 const rft::FieldSpec& field);

// Critical smoothness ratio s* in [1, 6] where the RFT threshold crosses the
// Bonferroni threshold (isotropic voxels). Outside the range the sign of the
// difference never changes and a sentinel status is returned instead.
struct Crossover {
  enum class Status { found, below_range, above_range };
  Status status = Status::found;
  double ratio = 0;  // meaningful only when status == found
};

Crossover crossover_smoothness(double voxel_mm, double nu, double alpha, double volume_mm3);

// Full grid in deterministic row order: voxel asc, nu asc, ratio asc. Cells
// where the RFT solver errors are marked, not dropped.
std::vector<SweepCell> sweep(std::vector<double> voxel_sizes, const Range& nu_range,
                             const Range& ratio_range, double alpha, double volume_mm3);

// header: voxel_mm,df,smoothness_ratio,t_rft,t_bonferroni,rft_valid
// values: 6 significant digits, booleans true/false, nan for error cells
void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells);

}  // namespace latticefwe::comparator
