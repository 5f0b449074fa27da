#include "latticefwe/survey.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace latticefwe::survey {

namespace {

constexpr const char* kMethodTokens[kMethodCount] = {
    "corrected_parametric", "uncorrected_parametric",
    "simulation",           "machine_learning",
    "fdr",                  "tfce",
    "permutation",          "mixture_model",
    "bonferroni",           "not_reported",
};

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = first + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

void append_double(std::string& line, double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, ptr);
  (void)ec;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

double mean_of(std::span<const double> xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

const char kStudyCsvHeader[] =
    "study_id,voxel_x_mm,voxel_y_mm,voxel_z_mm,applied_fwhm_mm,software,correction_method,"
    "uses_rft";

const char* method_token(CorrectionMethod m) {
  return kMethodTokens[static_cast<std::size_t>(m)];
}

CorrectionMethod method_from_token(const std::string& token) {
  for (std::size_t i = 0; i < kMethodCount; ++i)
    if (token == kMethodTokens[i]) return static_cast<CorrectionMethod>(i);
  throw std::invalid_argument("unknown correction_method '" + token + "'");
}

IngestResult ingest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedHeader("ingest: empty input, header expected");
  strip_cr(line);
  if (line != kStudyCsvHeader)
    throw MalformedHeader("ingest: header mismatch, got '" + line + "'");

  IngestResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto reject = [&](std::string reason) {
      result.rejected.push_back({line_no, std::move(reason)});
    };
    const auto fields = split_fields(line);
    if (fields.size() != 8) {
      reject("expected 8 fields, got " + std::to_string(fields.size()));
      continue;
    }
    StudyRecord rec;
    rec.study_id = fields[0];
    if (rec.study_id.empty()) {
      reject("study_id is empty");
      continue;
    }
    const char* dim_names[] = {"voxel_x_mm", "voxel_y_mm", "voxel_z_mm"};
    double* dims[] = {&rec.voxel_x_mm, &rec.voxel_y_mm, &rec.voxel_z_mm};
    bool ok = true;
    for (int d = 0; d < 3 && ok; ++d) {
      if (!parse_double(fields[1 + d], *dims[d])) {
        reject(std::string(dim_names[d]) + " is not a number: '" + fields[1 + d] + "'");
        ok = false;
      } else if (!(*dims[d] > 0.0)) {
        reject(std::string(dim_names[d]) + " must be > 0");
        ok = false;
      }
    }
    if (!ok) continue;
    if (!parse_double(fields[4], rec.applied_fwhm_mm)) {
      reject("applied_fwhm_mm is not a number: '" + fields[4] + "'");
      continue;
    }
    if (rec.applied_fwhm_mm < 0.0) {
      reject("applied_fwhm_mm must be >= 0");
      continue;
    }
    rec.software = fields[5];
    try {
      rec.correction_method = method_from_token(fields[6]);
    } catch (const std::invalid_argument& e) {
      reject(e.what());
      continue;
    }
    if (fields[7] == "true") {
      rec.uses_rft = true;
    } else if (fields[7] == "false") {
      rec.uses_rft = false;
    } else {
      reject("uses_rft must be 'true' or 'false', got '" + fields[7] + "'");
      continue;
    }
    if (rec.uses_rft != (rec.correction_method == CorrectionMethod::corrected_parametric)) {
      reject("uses_rft inconsistent with correction_method");
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

void write_csv(std::ostream& out, std::span<const StudyRecord> records) {
  out << kStudyCsvHeader << '\n';
  std::string line;
  for (const StudyRecord& r : records) {
    line.clear();
    line += r.study_id;
    line += ',';
    append_double(line, r.voxel_x_mm);
    line += ',';
    append_double(line, r.voxel_y_mm);
    line += ',';
    append_double(line, r.voxel_z_mm);
    line += ',';
    append_double(line, r.applied_fwhm_mm);
    line += ',';
    line += r.software;
    line += ',';
    line += method_token(r.correction_method);
    line += ',';
    line += r.uses_rft ? "true" : "false";
    line += '\n';
    out << line;
  }
}

double smoothness_ratio(const StudyRecord& record, RatioMode mode) {
  if (!(record.applied_fwhm_mm > 0.0))
    throw std::domain_error("smoothness_ratio: study is unsmoothed (fwhm = 0)");
  if (mode == RatioMode::in_plane) return record.applied_fwhm_mm / record.voxel_x_mm;
  const double g = std::cbrt(record.voxel_x_mm * record.voxel_y_mm * record.voxel_z_mm);
  return record.applied_fwhm_mm / g;
}

RatioModel fit_ratio_model(std::span<const double> ratios) {
  if (ratios.size() < 2)
    throw std::invalid_argument("fit_ratio_model: need at least 2 ratios");
  const double mean = mean_of(ratios);
  double ss = 0;
  for (double r : ratios) ss += (r - mean) * (r - mean);
  const double var = ss / static_cast<double>(ratios.size());
  if (!(var > 0.0)) throw std::invalid_argument("fit_ratio_model: zero variance");
  return {mean, std::sqrt(var)};
}

double prob_meets_assumption(const RatioModel& model, double critical_ratio) {
  if (!(model.sd > 0.0)) throw std::domain_error("prob_meets_assumption: requires sd > 0");
  return 1.0 - stats::normal_cdf((critical_ratio - model.mean) / model.sd);
}

RatioModel adjust_model(const RatioModel& model, double multiplier) {
  if (!(multiplier > 0.0)) throw std::domain_error("adjust_model: multiplier must be > 0");
  return {model.mean * multiplier, model.sd * multiplier};
}

FailPercentages fail_percentage(const RatioModel& model, const ResidualQuantiles& quantiles,
                                double critical_ratio) {
  if (!(quantiles.q05 > 0.0 && quantiles.q05 <= quantiles.q50 && quantiles.q50 <= quantiles.q95))
    throw std::domain_error("fail_percentage: quantiles must satisfy 0 < q05 <= q50 <= q95");
  const auto fail_at = [&](double q) {
    const RatioModel m = adjust_model(model, q);
    return 100.0 * stats::normal_cdf((critical_ratio - m.mean) / m.sd);
  };
  return {fail_at(quantiles.q95), fail_at(quantiles.q50), fail_at(quantiles.q05)};
}

GroupComparison compare_rft_users(std::span<const StudyRecord> records, RatioMode mode) {
  GroupComparison out;
  std::vector<double> rft, other;
  for (const StudyRecord& r : records) {
    if (!(r.applied_fwhm_mm > 0.0)) {
      ++out.n_unsmoothed;
      continue;
    }
    (r.uses_rft ? rft : other).push_back(smoothness_ratio(r, mode));
  }
  if (rft.size() < 2 || other.size() < 2)
    throw std::invalid_argument("compare_rft_users: each group needs >= 2 smoothed studies");
  out.n_rft = rft.size();
  out.n_other = other.size();
  out.mean_rft = mean_of(rft);
  out.mean_other = mean_of(other);
  out.test = stats::welch_t_test(rft, other);
  return out;
}

namespace {

// Normal scores standardized to sample mean 0 and sample SD 1 (divide-by-(n-1)),
// so an affine map hits target moments exactly.
std::vector<double> standardized_scores(std::size_t n) {
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = stats::normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  const double m = mean_of(z);
  double ss = 0;
  for (double v : z) ss += (v - m) * (v - m);
  const double s = std::sqrt(ss / static_cast<double>(n - 1));
  for (double& v : z) v = (v - m) / s;
  return z;
}

}  // namespace

std::vector<StudyRecord> synthetic_survey() {
  constexpr std::size_t kRft = 68, kOther = 69, kTotal = kRft + kOther;

  const std::vector<double> z_rft = standardized_scores(kRft);
  const std::vector<double> z_other = standardized_scores(kOther);
  const std::vector<double> z_all = standardized_scores(kTotal);

  // Ratios: group means 2.05 / 1.94, sample SD 0.64 each.
  std::vector<double> ratio(kTotal);
  for (std::size_t i = 0; i < kRft; ++i) ratio[i] = 2.05 + 0.64 * z_rft[i];
  for (std::size_t i = 0; i < kOther; ++i) ratio[kRft + i] = 1.94 + 0.64 * z_other[i];

  // Voxel sizes via decorrelating permutations of the same score vector
  // (137 is prime, so i -> a*i + b mod 137 is a bijection).
  const auto perm = [](std::size_t i, std::size_t a, std::size_t b) {
    return (a * i + b) % kTotal;
  };
  std::vector<StudyRecord> records(kTotal);
  const std::size_t method_counts[kMethodCount] = {kRft, 24, 17, 8, 6, 3, 1, 1, 1, 8};
  std::size_t method_idx = 0, method_left = method_counts[0];
  for (std::size_t i = 0; i < kTotal; ++i) {
    StudyRecord& r = records[i];
    char id[8];
    std::snprintf(id, sizeof id, "S%03zu", i + 1);
    r.study_id = id;
    const double in_plane = 3.01 + 0.62 * z_all[perm(i, 53, 11)];
    r.voxel_x_mm = in_plane;
    r.voxel_y_mm = in_plane;
    r.voxel_z_mm = 3.53 + 0.80 * z_all[perm(i, 29, 3)];
    r.applied_fwhm_mm = ratio[i] * in_plane;
    const std::size_t s = perm(i, 71, 5);
    r.software = s < 89 ? "SPM" : s < 121 ? "FSL" : s < 130 ? "AFNI" : "other";
    while (method_left == 0) method_left = method_counts[++method_idx];
    r.correction_method = static_cast<CorrectionMethod>(method_idx);
    --method_left;
    r.uses_rft = r.correction_method == CorrectionMethod::corrected_parametric;
  }
  return records;
}

SurveyAnalysis analyze(std::span<const StudyRecord> records, double critical_ratio,
                       RatioMode mode, const ResidualQuantiles& quantiles) {
  SurveyAnalysis a;
  a.n_records = records.size();
  a.mode = mode;
  a.critical_ratio = critical_ratio;
  a.quantiles = quantiles;

  std::vector<double> ratios;
  std::size_t n_rft = 0, n_other = 0;
  for (const StudyRecord& r : records) {
    ++a.method_tally[static_cast<std::size_t>(r.correction_method)];
    if (!(r.applied_fwhm_mm > 0.0)) {
      ++a.n_unsmoothed;
      continue;
    }
    ratios.push_back(smoothness_ratio(r, mode));
    ++(r.uses_rft ? n_rft : n_other);
  }
  a.model = fit_ratio_model(ratios);
  a.prob_meets = prob_meets_assumption(a.model, critical_ratio);
  a.fail = fail_percentage(a.model, quantiles, critical_ratio);
  if (n_rft >= 2 && n_other >= 2) a.groups = compare_rft_users(records, mode);
  return a;
}

namespace {

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* mode_name(RatioMode mode) {
  return mode == RatioMode::in_plane ? "in_plane" : "geometric_mean";
}

}  // namespace

void write_report_text(std::ostream& out, const SurveyAnalysis& a) {
  out << "studies: " << a.n_records << " (unsmoothed, excluded from ratio fit: " << a.n_unsmoothed
      << ")\n";
  out << "correction methods:\n";
  for (std::size_t i = 0; i < kMethodCount; ++i)
    out << "  " << method_token(static_cast<CorrectionMethod>(i)) << ": " << a.method_tally[i]
        << '\n';
  out << "ratio model (" << mode_name(a.mode) << "): mean " << g6(a.model.mean) << " sd "
      << g6(a.model.sd) << '\n';
  out << "critical ratio: " << g6(a.critical_ratio) << '\n';
  out << "P(ratio >= critical): " << g6(a.prob_meets) << '\n';
  out << "residual quantiles (q05, q50, q95): " << g6(a.quantiles.q05) << ", "
      << g6(a.quantiles.q50) << ", " << g6(a.quantiles.q95) << '\n';
  out << "fail percentage (low / median / high): " << g6(a.fail.low) << " / " << g6(a.fail.median)
      << " / " << g6(a.fail.high) << '\n';
  if (a.groups) {
    const GroupComparison& g = *a.groups;
    out << "rft users vs others: mean " << g6(g.mean_rft) << " (n=" << g.n_rft << ") vs "
        << g6(g.mean_other) << " (n=" << g.n_other << "), Welch t = " << g6(g.test.t) << " (df "
        << g6(g.test.df) << "), p = " << g6(g.test.p_two_sided) << ", r = " << g6(g.test.effect_r)
        << '\n';
  } else {
    out << "rft users vs others: not computed (a group has < 2 smoothed studies)\n";
  }
}

void write_report_csv(std::ostream& out, const SurveyAnalysis& a) {
  out << "key,value\n";
  out << "n_records," << a.n_records << '\n';
  out << "n_unsmoothed," << a.n_unsmoothed << '\n';
  for (std::size_t i = 0; i < kMethodCount; ++i)
    out << "method_" << method_token(static_cast<CorrectionMethod>(i)) << ',' << a.method_tally[i]
        << '\n';
  out << "ratio_mode," << mode_name(a.mode) << '\n';
  out << "model_mean," << g6(a.model.mean) << '\n';
  out << "model_sd," << g6(a.model.sd) << '\n';
  out << "critical_ratio," << g6(a.critical_ratio) << '\n';
  out << "prob_meets," << g6(a.prob_meets) << '\n';
  out << "q05," << g6(a.quantiles.q05) << '\n';
  out << "q50," << g6(a.quantiles.q50) << '\n';
  out << "q95," << g6(a.quantiles.q95) << '\n';
  out << "fail_low_pct," << g6(a.fail.low) << '\n';
  out << "fail_median_pct," << g6(a.fail.median) << '\n';
  out << "fail_high_pct," << g6(a.fail.high) << '\n';
  if (a.groups) {
    const GroupComparison& g = *a.groups;
    out << "n_rft," << g.n_rft << '\n';
    out << "n_other," << g.n_other << '\n';
    out << "mean_rft," << g6(g.mean_rft) << '\n';
    out << "mean_other," << g6(g.mean_other) << '\n';
    out << "welch_t," << g6(g.test.t) << '\n';
    out << "welch_df," << g6(g.test.df) << '\n';
    out << "welch_p," << g6(g.test.p_two_sided) << '\n';
    out << "welch_r," << g6(g.test.effect_r) << '\n';
  }
}

}  // namespace latticefwe::survey
