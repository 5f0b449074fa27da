#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latticefwe/comparator.hpp"
#include "latticefwe/fieldsim.hpp"
#include "latticefwe/rft.hpp"
#include "latticefwe/survey.hpp"

namespace {

using nlohmann::json;
namespace comparator = latticefwe::comparator;
namespace fieldsim = latticefwe::fieldsim;
namespace rft = latticefwe::rft;
namespace survey = latticefwe::survey;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitComputeError = 2;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    values.push_back(std::stod(item, &used));
    if (used != item.size()) throw CLI::ValidationError("not a number: '" + item + "'");
  }
  if (values.empty()) throw CLI::ValidationError("empty list");
  return values;
}

// 1 value = isotropic; otherwise exactly 3.
std::array<double, 3> parse_triple(const std::string& text, const char* what) {
  const std::vector<double> v = parse_list(text);
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw CLI::ValidationError(std::string(what) + " takes 1 or 3 comma-separated values");
}

// start:end[:step], or a single value for a one-point range.
comparator::Range parse_range(const std::string& text, double default_step) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty() || parts.size() > 3)
    throw CLI::ValidationError("range must be start:end[:step], got '" + text + "'");
  std::vector<double> v;
  for (const std::string& p : parts) {
    std::size_t used = 0;
    v.push_back(std::stod(p, &used));
    if (used != p.size()) throw CLI::ValidationError("not a number: '" + p + "'");
  }
  comparator::Range r;
  r.start = v[0];
  r.end = v.size() > 1 ? v[1] : v[0];
  r.step = v.size() > 2 ? v[2] : default_step;
  return r;
}

std::string g6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Output goes to --output when given, stdout otherwise.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_json_sidecar(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open json file: " + path);
  out << j.dump(2) << '\n';
}

json field_to_json(const rft::FieldSpec& field) {
  if (field.family == rft::FieldFamily::Gaussian) return {{"family", "gaussian"}};
  return {{"family", "student_t"}, {"nu", field.nu}};
}

struct CommonOpts {
  double alpha = 0.05;
  double volume_mm3 = 1.4e6;
  std::string output_path;
  std::string json_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_volume = true) {
  cmd->add_option("--alpha", opts.alpha, "family-wise error rate")
      ->capture_default_str()
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  if (with_volume)
    cmd->add_option("--volume", opts.volume_mm3, "search volume in mm^3")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  cmd->add_option("--output", opts.output_path, "write the result here instead of stdout");
  cmd->add_option("--json", opts.json_path, "also write a full-precision JSON sidecar");
}

int run_threshold(const CommonOpts& opts, const std::string& voxel_text,
                  const std::string& fwhm_text, double df, bool gaussian) {
  rft::LatticeSpec lattice;
  lattice.voxel_mm = parse_triple(voxel_text, "--voxel");
  lattice.fwhm_mm = parse_triple(fwhm_text, "--fwhm");
  lattice.volume_mm3 = opts.volume_mm3;
  const rft::FieldSpec field =
      gaussian ? rft::FieldSpec::gaussian() : rft::FieldSpec::student_t(df);

  const comparator::ThresholdPair pair = comparator::compare_thresholds(opts.alpha, lattice, field);

  OutputTarget target(opts.output_path);
  target.stream() << "t_rft,t_bonferroni,rft_valid\n"
                  << g6(pair.t_rft) << ',' << g6(pair.t_bonferroni) << ','
                  << (pair.rft_valid() ? "true" : "false") << '\n';

  json j = {{"alpha", opts.alpha},
            {"volume_mm3", opts.volume_mm3},
            {"voxel_mm", lattice.voxel_mm},
            {"fwhm_mm", lattice.fwhm_mm},
            {"field", field_to_json(field)},
            {"t_rft", pair.t_rft},
            {"t_bonferroni", pair.t_bonferroni},
            {"rft_valid", pair.rft_valid()}};
  write_json_sidecar(opts.json_path, j);
  return kExitOk;
}

int run_crossover(const CommonOpts& opts, double voxel, double df) {
  const comparator::Crossover c =
      comparator::crossover_smoothness(voxel, df, opts.alpha, opts.volume_mm3);
  const char* status = c.status == comparator::Crossover::Status::found ? "found"
                       : c.status == comparator::Crossover::Status::below_range ? "below_range"
                                                                                : "above_range";
  const bool found = c.status == comparator::Crossover::Status::found;

  OutputTarget target(opts.output_path);
  target.stream() << "voxel_mm,df,status,ratio\n"
                  << g6(voxel) << ',' << g6(df) << ',' << status << ','
                  << (found ? g6(c.ratio) : "nan") << '\n';

  json j = {{"alpha", opts.alpha}, {"volume_mm3", opts.volume_mm3}, {"voxel_mm", voxel},
            {"df", df},           {"status", status}};
  j["ratio"] = found ? json(c.ratio) : json();
  write_json_sidecar(opts.json_path, j);
  return kExitOk;
}

int run_sweep(const CommonOpts& opts, const std::string& voxels_text, const std::string& df_text,
              const std::string& ratio_text) {
  const std::vector<double> voxels = parse_list(voxels_text);
  const comparator::Range df_range = parse_range(df_text, 1.0);
  const comparator::Range ratio_range = parse_range(ratio_text, 0.1);

  const std::vector<comparator::SweepCell> cells =
      comparator::sweep(voxels, df_range, ratio_range, opts.alpha, opts.volume_mm3);

  OutputTarget target(opts.output_path);
  comparator::write_sweep_csv(target.stream(), cells);

  if (!opts.json_path.empty()) {
    json rows = json::array();
    for (const comparator::SweepCell& c : cells)
      rows.push_back({{"voxel_mm", c.voxel_mm},
                      {"df", c.nu},
                      {"smoothness_ratio", c.smoothness_ratio},
                      {"t_rft", c.rft_error ? json() : json(c.pair.t_rft)},
                      {"t_bonferroni", c.pair.t_bonferroni},
                      {"rft_valid", c.pair.rft_valid()},
                      {"rft_error", c.rft_error}});
    write_json_sidecar(opts.json_path,
                       {{"alpha", opts.alpha}, {"volume_mm3", opts.volume_mm3}, {"cells", rows}});
  }
  return kExitOk;
}

json analysis_to_json(const survey::SurveyAnalysis& a) {
  json methods;
  for (std::size_t i = 0; i < survey::kMethodCount; ++i)
    methods[survey::method_token(static_cast<survey::CorrectionMethod>(i))] = a.method_tally[i];
  json j = {{"n_records", a.n_records},
            {"n_unsmoothed", a.n_unsmoothed},
            {"methods", methods},
            {"ratio_mode", a.mode == survey::RatioMode::in_plane ? "in_plane" : "geometric_mean"},
            {"model", {{"mean", a.model.mean}, {"sd", a.model.sd}}},
            {"critical_ratio", a.critical_ratio},
            {"prob_meets", a.prob_meets},
            {"quantiles", {{"q05", a.quantiles.q05}, {"q50", a.quantiles.q50}, {"q95", a.quantiles.q95}}},
            {"fail_pct", {{"low", a.fail.low}, {"median", a.fail.median}, {"high", a.fail.high}}}};
  if (a.groups) {
    const survey::GroupComparison& g = *a.groups;
    j["groups"] = {{"n_rft", g.n_rft},
                   {"n_other", g.n_other},
                   {"n_unsmoothed", g.n_unsmoothed},
                   {"mean_rft", g.mean_rft},
                   {"mean_other", g.mean_other},
                   {"welch",
                    {{"t", g.test.t},
                     {"df", g.test.df},
                     {"p_two_sided", g.test.p_two_sided},
                     {"effect_r", g.test.effect_r}}}};
  }
  return j;
}

int run_survey(const CommonOpts& opts, const std::string& input_path, double critical,
               const std::string& mode_text, double q05, double q50, double q95, bool as_csv) {
  std::ifstream in(input_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open input file: " << input_path << '\n';
    return kExitInputError;
  }
  const survey::RatioMode mode = mode_text == "geometric_mean" ? survey::RatioMode::geometric_mean
                                                               : survey::RatioMode::in_plane;
  survey::IngestResult ingested = survey::ingest(in);
  for (const survey::RejectedRow& r : ingested.rejected)
    std::cerr << "warning: rejected row at line " << r.line << ": " << r.reason << '\n';

  const survey::SurveyAnalysis a =
      survey::analyze(ingested.records, critical, mode, {q05, q50, q95});

  OutputTarget target(opts.output_path);
  if (as_csv)
    survey::write_report_csv(target.stream(), a);
  else
    survey::write_report_text(target.stream(), a);

  if (!opts.json_path.empty()) {
    json j = analysis_to_json(a);
    json rejected = json::array();
    for (const survey::RejectedRow& r : ingested.rejected)
      rejected.push_back({{"line", r.line}, {"reason", r.reason}});
    j["rejected_rows"] = rejected;
    write_json_sidecar(opts.json_path, j);
  }
  return kExitOk;
}

int run_simulate(const CommonOpts& opts, const std::string& dims_text,
                 const std::string& fwhm_text, const std::string& family_text, double df,
                 int n_realizations, std::uint64_t seed, const std::string& thresholds_text,
                 std::size_t budget_mb) {
  fieldsim::SimConfig config;
  const std::array<double, 3> dims_d = parse_triple(dims_text, "--dims");
  for (int a = 0; a < 3; ++a) {
    if (dims_d[a] != std::floor(dims_d[a]) || dims_d[a] < 1)
      throw CLI::ValidationError("--dims needs positive integers");
    config.dims[a] = static_cast<int>(dims_d[a]);
  }
  config.fwhm_vox = parse_triple(fwhm_text, "--fwhm-vox");
  config.field =
      family_text == "gaussian" ? rft::FieldSpec::gaussian() : rft::FieldSpec::student_t(df);
  config.n_realizations = n_realizations;
  config.master_seed = seed;
  config.memory_budget_bytes = budget_mb << 20;

  const std::vector<double> thresholds = parse_list(thresholds_text);
  const std::vector<fieldsim::FweEstimate> estimates = fieldsim::empirical_fwe(config, thresholds);

  OutputTarget target(opts.output_path);
  fieldsim::write_sim_csv(target.stream(), config, thresholds, estimates);

  if (!opts.json_path.empty()) {
    json rows = json::array();
    for (std::size_t k = 0; k < estimates.size(); ++k)
      rows.push_back({{"threshold", thresholds[k]},
                      {"trials", estimates[k].trials},
                      {"rejections", estimates[k].rejections},
                      {"rate", estimates[k].rate},
                      {"ci_low", estimates[k].ci_low},
                      {"ci_high", estimates[k].ci_high}});
    write_json_sidecar(opts.json_path, {{"dims", config.dims},
                                        {"fwhm_vox", config.fwhm_vox},
                                        {"field", field_to_json(config.field)},
                                        {"n_realizations", config.n_realizations},
                                        {"master_seed", config.master_seed},
                                        {"estimates", rows}});
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Family-wise-error thresholds for lattice-sampled random fields:\n"
               "RFT expected-Euler-characteristic thresholds against Bonferroni, the\n"
               "critical-smoothness crossover, survey-distribution analysis, and a\n"
               "Monte Carlo field simulator."};
  app.require_subcommand(1);

  // threshold
  CommonOpts thr_opts;
  std::string thr_voxel = "3", thr_fwhm;
  double thr_df = 0;
  bool thr_gaussian = false;
  CLI::App* thr = app.add_subcommand(
      "threshold", "RFT and Bonferroni thresholds for one lattice configuration.\n"
                   "Output columns: t_rft,t_bonferroni,rft_valid");
  thr->add_option("--voxel", thr_voxel, "voxel size in mm (1 or 3 comma-separated values)")
      ->capture_default_str();
  thr->add_option("--fwhm", thr_fwhm, "applied smoothness FWHM in mm (1 or 3 values)")
      ->required();
  CLI::Option* thr_df_opt = thr->add_option("--df", thr_df, "degrees of freedom of the t-field");
  CLI::Option* thr_g_opt =
      thr->add_flag("--gaussian", thr_gaussian, "Gaussian field instead of a t-field");
  thr_df_opt->excludes(thr_g_opt);
  add_common(thr, thr_opts);

  // crossover
  CommonOpts cro_opts;
  double cro_voxel = 3, cro_df = 0;
  CLI::App* cro = app.add_subcommand(
      "crossover", "Critical smoothness ratio where RFT stops being more conservative\n"
                   "than Bonferroni (searched in ratio range [1, 6]).\n"
                   "Output columns: voxel_mm,df,status,ratio");
  cro->add_option("--voxel", cro_voxel, "isotropic voxel size in mm")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cro->add_option("--df", cro_df, "degrees of freedom of the t-field")
      ->required()
      ->check(CLI::PositiveNumber);
  add_common(cro, cro_opts);

  // sweep
  CommonOpts swe_opts;
  std::string swe_voxels = "1,2,3", swe_df = "10:100", swe_ratio = "1:6:0.1";
  CLI::App* swe = app.add_subcommand(
      "sweep", "Threshold grid over voxel sizes, degrees of freedom and smoothness\n"
               "ratios; rows ordered voxel asc, df asc, ratio asc.\n"
               "Output columns: voxel_mm,df,smoothness_ratio,t_rft,t_bonferroni,rft_valid\n"
               "(t_rft is nan on cells where the RFT solver reports an error)");
  swe->add_option("--voxels", swe_voxels, "comma-separated voxel sizes in mm")
      ->capture_default_str();
  swe->add_option("--df", swe_df, "degrees-of-freedom range start:end[:step], default step 1")
      ->capture_default_str();
  swe->add_option("--ratio", swe_ratio, "smoothness-ratio range start:end[:step], default step 0.1")
      ->capture_default_str();
  add_common(swe, swe_opts);

  // survey
  CommonOpts sur_opts;
  std::string sur_input, sur_mode = "in_plane";
  double sur_critical = 3.5, sur_q05 = 1.26, sur_q50 = 1.36, sur_q95 = 1.77;
  bool sur_csv = false;
  CLI::App* sur = app.add_subcommand(
      "survey", "Smoothness-ratio analysis of a study table: normal model fit,\n"
                "P(ratio >= critical), residual-quantile-adjusted fail percentages,\n"
                "and the RFT-user group comparison.\n"
                "Input columns: study_id,voxel_x_mm,voxel_y_mm,voxel_z_mm,\n"
                "applied_fwhm_mm,software,correction_method,uses_rft");
  sur->add_option("--input", sur_input, "study table CSV")->required();
  sur->add_option("--critical", sur_critical, "critical smoothness ratio (voxels)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sur->add_option("--mode", sur_mode, "ratio convention")
      ->capture_default_str()
      ->check(CLI::IsMember({"in_plane", "geometric_mean"}));
  sur->add_option("--q05", sur_q05, "residual-smoothness .05 quantile multiplier")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sur->add_option("--q50", sur_q50, "residual-smoothness median multiplier")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sur->add_option("--q95", sur_q95, "residual-smoothness .95 quantile multiplier")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sur->add_flag("--csv", sur_csv, "emit the key,value CSV report instead of plain text");
  add_common(sur, sur_opts, /*with_volume=*/false);

  // simulate
  CommonOpts sim_opts;
  std::string sim_dims = "32,32,32", sim_fwhm = "0", sim_family = "gaussian", sim_thresholds;
  double sim_df = 0;
  int sim_n = 1000;
  std::uint64_t sim_seed = 0;
  std::size_t sim_budget_mb = 1024;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte Carlo empirical family-wise error of max-statistic thresholds\n"
                  "on smoothed lattice fields.\n"
                  "Output columns: trials,rejections,rate,ci_low,ci_high,threshold,dims,\n"
                  "fwhm_vox,family,nu,master_seed");
  sim->add_option("--dims", sim_dims, "lattice size in voxels (1 or 3 comma-separated values)")
      ->capture_default_str();
  sim->add_option("--fwhm-vox", sim_fwhm, "kernel FWHM in voxel units (1 or 3 values)")
      ->capture_default_str();
  sim->add_option("--family", sim_family, "field family")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "t"}));
  CLI::Option* sim_df_opt =
      sim->add_option("--df", sim_df, "degrees of freedom (required for --family t)");
  sim->add_option("--n", sim_n, "number of realizations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "master seed for the deterministic seed stream")
      ->capture_default_str();
  sim->add_option("--thresholds", sim_thresholds, "comma-separated thresholds to evaluate")
      ->required();
  sim->add_option("--memory-budget-mb", sim_budget_mb, "padded-lattice memory budget in MiB")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_common(sim, sim_opts, /*with_volume=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint
    return kExitInputError;
  }

  try {
    if (thr->parsed()) {
      if (!thr_gaussian && thr_df_opt->count() == 0)
        throw CLI::ValidationError("threshold needs --df or --gaussian");
      return run_threshold(thr_opts, thr_voxel, thr_fwhm, thr_df, thr_gaussian);
    }
    if (cro->parsed()) return run_crossover(cro_opts, cro_voxel, cro_df);
    if (swe->parsed()) return run_sweep(swe_opts, swe_voxels, swe_df, swe_ratio);
    if (sur->parsed())
      return run_survey(sur_opts, sur_input, sur_critical, sur_mode, sur_q05, sur_q50, sur_q95,
                        sur_csv);
    if (sim->parsed()) {
      if (sim_family == "t" && sim_df_opt->count() == 0)
        throw CLI::ValidationError("--family t needs --df");
      return run_simulate(sim_opts, sim_dims, sim_fwhm, sim_family, sim_df, sim_n, sim_seed,
                          sim_thresholds, sim_budget_mb);
    }
  } catch (const rft::ThresholdError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitComputeError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;  // unreachable with require_subcommand(1)
}
