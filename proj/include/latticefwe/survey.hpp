#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latticefwe/stats.hpp"

namespace latticefwe::survey {

enum class CorrectionMethod {
  corrected_parametric,
  uncorrected_parametric,
  simulation,
  machine_learning,
  fdr,
  tfce,
  permutation,
  mixture_model,
  bonferroni,
  not_reported,
};
inline constexpr std::size_t kMethodCount = 10;

const char* method_token(CorrectionMethod m);
CorrectionMethod method_from_token(const std::string& token);  // throws std::invalid_argument

struct StudyRecord {
  std::string study_id;
  double voxel_x_mm = 0;
  double voxel_y_mm = 0;
  double voxel_z_mm = 0;
  double applied_fwhm_mm = 0;  // 0 = unsmoothed
  std::string software;
  CorrectionMethod correction_method = CorrectionMethod::not_reported;
  bool uses_rft = false;  // true iff correction_method == corrected_parametric

  bool operator==(const StudyRecord&) const = default;
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based; header is line 1
  std::string reason;
};

struct IngestResult {
  std::vector<StudyRecord> records;
  std::vector<RejectedRow> rejected;
};

class MalformedHeader : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

extern const char kStudyCsvHeader[];

// Bad rows land in the reject report with their line number; only a wrong
// header aborts.
IngestResult ingest(std::istream& in);
void write_csv(std::ostream& out, std::span<const StudyRecord> records);

enum class RatioMode { in_plane, geometric_mean };

// FWHM in voxel units. Throws for unsmoothed records; callers exclude those
// from ratio analyses and count them separately.
double smoothness_ratio(const StudyRecord& record, RatioMode mode = RatioMode::in_plane);

struct RatioModel {
  double mean = 0;
  double sd = 1;
};

// Maximum-likelihood normal fit (divide-by-n variance).
RatioModel fit_ratio_model(std::span<const double> ratios);

struct ResidualQuantiles {
  double q05 = 1.26;
  double q50 = 1.36;
  double q95 = 1.77;
};

// P(ratio >= critical) under the model.
double prob_meets_assumption(const RatioModel& model, double critical_ratio);

// Residual-smoothness correction: both parameters scale by the multiplier.
RatioModel adjust_model(const RatioModel& model, double multiplier);

struct FailPercentages {
  double low = 0;     // under the q95-adjusted model
  double median = 0;  // q50
  double high = 0;    // q05
};

FailPercentages fail_percentage(const RatioModel& model, const ResidualQuantiles& quantiles,
                                double critical_ratio);

struct GroupComparison {
  std::size_t n_rft = 0;
  std::size_t n_other = 0;
  std::size_t n_unsmoothed = 0;  // excluded from both groups
  double mean_rft = 0;
  double mean_other = 0;
  stats::WelchResult test;
};

// Welch t-test of smoothness ratios, RFT users against everyone else.
// Requires >= 2 smoothed records in each group.
GroupComparison compare_rft_users(std::span<const StudyRecord> records,
                                  RatioMode mode = RatioMode::in_plane);

// Deterministic 137-record survey with the published group structure: 68 RFT
// users at ratio mean 2.05 and 69 others at 1.94, sample SD 0.64 each, built
// from standardized normal scores (no RNG).
std::vector<StudyRecord> synthetic_survey();

struct SurveyAnalysis {
  std::size_t n_records = 0;
  std::size_t n_unsmoothed = 0;
  std::array<std::size_t, kMethodCount> method_tally{};
  RatioMode mode = RatioMode::in_plane;
  double critical_ratio = 0;
  RatioModel model;
  ResidualQuantiles quantiles;
  double prob_meets = 0;
  FailPercentages fail;
  std::optional<GroupComparison> groups;  // absent when a group has < 2 members
};

SurveyAnalysis analyze(std::span<const StudyRecord> records, double critical_ratio,
                       RatioMode mode = RatioMode::in_plane,
                       const ResidualQuantiles& quantiles = {});

void write_report_text(std::ostream& out, const SurveyAnalysis& a);
void write_report_csv(std::ostream& out, const SurveyAnalysis& a);

}  // namespace latticefwe::survey
