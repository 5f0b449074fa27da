#include "latticefwe/comparator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "latticefwe/stats.hpp"

namespace latticefwe::comparator {

std::vector<double> Range::values() const {
  if (!(step > 0.0)) throw std::domain_error("Range: step must be > 0");
  if (end < start) throw std::domain_error("Range: end must be >= start");
  // Relative slack keeps 1:6:0.1 at 51 values instead of losing the endpoint
  // to the binary representation of 0.1.
  const auto count = static_cast<std::size_t>(
      std::floor((end - start) / step * (1.0 + 1e-12) + 1e-9));
  std::vector<double> out;
  out.reserve(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (std::fabs(v - end) <= step * 1e-9) v = end;
    out.push_back(v);
  }
  return out;
}

std::int64_t voxel_count(double volume_mm3, const std::array<double, 3>& voxel_mm) {
  if (!(volume_mm3 > 0.0)) throw std::domain_error("voxel_count: volume must be > 0");
  for (double v : voxel_mm)
    if (!(v > 0.0)) throw std::domain_error("voxel_count: voxel dimensions must be > 0");
  const double ratio = volume_mm3 / (voxel_mm[0] * voxel_mm[1] * voxel_mm[2]);
  // 1.4e6 / 8 and friends should land on the integer they mean, not one below.
  const double nearest = std::round(ratio);
  const double n = (std::fabs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
                       ? nearest
                       : std::floor(ratio);
  if (n < 1.0) throw std::domain_error("voxel_count: no whole voxel fits the volume");
  return static_cast<std::int64_t>(n);
}

double bonferroni_threshold(double alpha, std::int64_t n_tests, const rft::FieldSpec& field) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("bonferroni_threshold: requires 0 < alpha < 1");
  if (n_tests < 1) throw std::domain_error("bonferroni_threshold: requires n_tests >= 1");
  const double per_test = alpha / static_cast<double>(n_tests);
  if (field.family == rft::FieldFamily::Gaussian)
    return stats::normal_quantile(1.0 - per_test);
  return stats::t_quantile(per_test, field.nu);
}

ThresholdPair compare_thresholds(double alpha, const rft::LatticeSpec& lattice,
                                 const rft::FieldSpec& field) {
  ThresholdPair pair;
  pair.t_rft = rft::rft_threshold(alpha, rft::resel_count_simplified(lattice), field);
  pair.t_bonferroni =
      bonferroni_threshold(alpha, voxel_count(lattice.volume_mm3, lattice.voxel_mm), field);
  return pair;
}

Crossover crossover_smoothness(double voxel_mm, double nu, double alpha, double volume_mm3) {
  if (!(voxel_mm > 0.0) || !(nu > 0.0) || !(volume_mm3 > 0.0))
    throw std::domain_error("crossover_smoothness: inputs must be > 0");

  const auto field = rft::FieldSpec::student_t(nu);
  const double t_bonf =
      bonferroni_threshold(alpha, voxel_count(volume_mm3, {voxel_mm, voxel_mm, voxel_mm}), field);
  const auto diff = [&](double ratio) {
    rft::LatticeSpec lattice;
    lattice.voxel_mm = {voxel_mm, voxel_mm, voxel_mm};
    lattice.volume_mm3 = volume_mm3;
    const double f = ratio * voxel_mm;
    lattice.fwhm_mm = {f, f, f};
    return rft::rft_threshold(alpha, rft::resel_count_simplified(lattice), field) - t_bonf;
  };

  double lo = 1.0, hi = 6.0;
  double d_lo = diff(lo);
  double d_hi = diff(hi);
  // diff decreases with smoothing: more smoothness, fewer resels, lower RFT
  // threshold against a fixed Bonferroni value.
  if (d_lo < 0.0) return {Crossover::Status::below_range, 0.0};
  if (d_hi > 0.0) return {Crossover::Status::above_range, 0.0};
  if (d_lo == 0.0) return {Crossover::Status::found, lo};
  if (d_hi == 0.0) return {Crossover::Status::found, hi};

  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    const double d = diff(mid);
    if (std::fabs(d) <= 1e-8) return {Crossover::Status::found, mid};
    if (d > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {Crossover::Status::found, mid};
}

std::vector<SweepCell> sweep(std::vector<double> voxel_sizes, const Range& nu_range,
                             const Range& ratio_range, double alpha, double volume_mm3) {
  if (voxel_sizes.empty()) throw std::domain_error("sweep: voxel_sizes must be nonempty");
  std::sort(voxel_sizes.begin(), voxel_sizes.end());
  const std::vector<double> nus = nu_range.values();
  const std::vector<double> ratios = ratio_range.values();

  std::vector<SweepCell> cells;
  cells.reserve(voxel_sizes.size() * nus.size() * ratios.size());
  for (double voxel : voxel_sizes) {
    const std::int64_t n_tests = voxel_count(volume_mm3, {voxel, voxel, voxel});
    for (double nu : nus) {
      const auto field = rft::FieldSpec::student_t(nu);
      const double t_bonf = bonferroni_threshold(alpha, n_tests, field);
      for (double ratio : ratios) {
        SweepCell cell;
        cell.voxel_mm = voxel;
        cell.nu = nu;
        cell.smoothness_ratio = ratio;
        cell.pair.t_bonferroni = t_bonf;
        rft::LatticeSpec lattice;
        lattice.voxel_mm = {voxel, voxel, voxel};
        lattice.volume_mm3 = volume_mm3;
        const double f = ratio * voxel;
        lattice.fwhm_mm = {f, f, f};
        try {
          cell.pair.t_rft =
              rft::rft_threshold(alpha, rft::resel_count_simplified(lattice), field);
        } catch (const rft::ThresholdError&) {
          cell.pair.t_rft = std::numeric_limits<double>::quiet_NaN();
          cell.rft_error = true;
        }
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

namespace {

void append_g6(std::string& line, double v) {
  if (std::isnan(v)) {
    line += "nan";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  line += buf;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "voxel_mm,df,smoothness_ratio,t_rft,t_bonferroni,rft_valid\n";
  std::string line;
  for (const SweepCell& c : cells) {
    line.clear();
    append_g6(line, c.voxel_mm);
    line += ',';
    append_g6(line, c.nu);
    line += ',';
    append_g6(line, c.smoothness_ratio);
    line += ',';
    append_g6(line, c.pair.t_rft);
    line += ',';
    append_g6(line, c.pair.t_bonferroni);
    line += ',';
    line += c.pair.rft_valid() ? "true" : "false";
    line += '\n';
    out << line;
  }
}

}  // namespace latticefwe::comparator
