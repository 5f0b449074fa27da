#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "latticefwe/comparator.hpp"
#include "latticefwe/fieldsim.hpp"
#include "latticefwe/rft.hpp"
#include "latticefwe/stats.hpp"
#include "latticefwe/survey.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace latticefwe;

namespace {

// Lattice data is x-fastest, i.e. Fortran order for an (nx, ny, nz) array,
// so arr[x, y, z] == Lattice::at(x, y, z) and axis numbers line up.
py::array_t<double> lattice_to_array(const fieldsim::Lattice& f) {
  const auto [nx, ny, nz] = f.dims;
  py::array_t<double, py::array::f_style> arr({nx, ny, nz});
  std::copy(f.data.begin(), f.data.end(), arr.mutable_data());
  return arr;
}

using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

fieldsim::Lattice array_to_lattice(const FArray& arr) {
  if (arr.ndim() != 3) throw std::invalid_argument("expected a 3-D array");
  fieldsim::Lattice f;
  f.dims = {static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
            static_cast<int>(arr.shape(2))};
  f.data.assign(arr.data(), arr.data() + arr.size());
  return f;
}

rft::FieldSpec parse_family(const std::string& family, double nu) {
  if (family == "gaussian") return rft::FieldSpec::gaussian();
  if (family == "student_t") return rft::FieldSpec::student_t(nu);
  throw std::invalid_argument("family must be 'gaussian' or 'student_t'");
}

survey::RatioMode parse_mode(const std::string& mode) {
  if (mode == "in_plane") return survey::RatioMode::in_plane;
  if (mode == "geometric_mean") return survey::RatioMode::geometric_mean;
  throw std::invalid_argument("mode must be 'in_plane' or 'geometric_mean'");
}

survey::ResidualQuantiles parse_quantiles(const std::tuple<double, double, double>& q) {
  return {std::get<0>(q), std::get<1>(q), std::get<2>(q)};
}

py::dict welch_to_dict(const stats::WelchResult& r) {
  return py::dict("t"_a = r.t, "df"_a = r.df, "p_two_sided"_a = r.p_two_sided,
                  "effect_r"_a = r.effect_r);
}

py::dict analysis_to_dict(const survey::SurveyAnalysis& a) {
  py::dict tally;
  for (std::size_t i = 0; i < survey::kMethodCount; ++i)
    tally[survey::method_token(static_cast<survey::CorrectionMethod>(i))] = a.method_tally[i];
  py::object groups = py::none();
  if (a.groups) {
    py::dict g("n_rft"_a = a.groups->n_rft, "n_other"_a = a.groups->n_other,
               "n_unsmoothed"_a = a.groups->n_unsmoothed, "mean_rft"_a = a.groups->mean_rft,
               "mean_other"_a = a.groups->mean_other);
    g["test"] = welch_to_dict(a.groups->test);
    groups = std::move(g);
  }
  py::dict d("n_records"_a = a.n_records, "n_unsmoothed"_a = a.n_unsmoothed,
             "method_tally"_a = tally,
             "mode"_a = a.mode == survey::RatioMode::in_plane ? "in_plane" : "geometric_mean",
             "critical_ratio"_a = a.critical_ratio, "mean"_a = a.model.mean, "sd"_a = a.model.sd,
             "prob_meets"_a = a.prob_meets);
  d["fail"] = py::dict("low"_a = a.fail.low, "median"_a = a.fail.median, "high"_a = a.fail.high);
  d["groups"] = groups;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Family-wise error thresholds for lattice-sampled random fields";
  m.attr("__version__") = "0.1.0";

  // stats
  m.def("t_tail", &stats::t_tail, "t"_a, "nu"_a, "Upper tail P(T >= t) of Student t.");
  m.def("t_quantile", &stats::t_quantile, "p"_a, "nu"_a, "Upper-tail t quantile: P(T >= q) = p.");
  m.def("normal_cdf", &stats::normal_cdf, "z"_a);
  m.def("normal_tail", &stats::normal_tail, "z"_a);
  m.def("normal_quantile", &stats::normal_quantile, "p"_a, "Lower-tail normal quantile.");
  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return welch_to_dict(stats::welch_t_test(a, b));
      },
      "sample_a"_a, "sample_b"_a);

  // rft
  py::class_<rft::FieldSpec>(m, "FieldSpec")
      .def_static("gaussian", &rft::FieldSpec::gaussian)
      .def_static("student_t", &rft::FieldSpec::student_t, "nu"_a)
      .def_property_readonly("family",
                             [](const rft::FieldSpec& f) {
                               return f.family == rft::FieldFamily::Gaussian ? "gaussian"
                                                                             : "student_t";
                             })
      .def_readonly("nu", &rft::FieldSpec::nu)
      .def("__repr__", [](const rft::FieldSpec& f) {
        return f.family == rft::FieldFamily::Gaussian
                   ? std::string("FieldSpec.gaussian()")
                   : "FieldSpec.student_t(" + std::to_string(f.nu) + ")";
      });

  py::class_<rft::LatticeSpec>(m, "LatticeSpec")
      .def(py::init([](const std::array<double, 3>& voxel_mm, double volume_mm3,
                       const std::array<double, 3>& fwhm_mm) {
             rft::LatticeSpec s{voxel_mm, volume_mm3, fwhm_mm};
             s.validate();
             return s;
           }),
           "voxel_mm"_a, "volume_mm3"_a, "fwhm_mm"_a)
      .def_readonly("voxel_mm", &rft::LatticeSpec::voxel_mm)
      .def_readonly("volume_mm3", &rft::LatticeSpec::volume_mm3)
      .def_readonly("fwhm_mm", &rft::LatticeSpec::fwhm_mm)
      .def("smoothness_ratio", &rft::LatticeSpec::smoothness_ratio);

  py::class_<rft::ReselVector>(m, "ReselVector")
      .def(py::init([](double r0, double r1, double r2, double r3) {
             return rft::ReselVector{r0, r1, r2, r3};
           }),
           "r0"_a = 0.0, "r1"_a = 0.0, "r2"_a = 0.0, "r3"_a = 0.0)
      .def_readwrite("r0", &rft::ReselVector::r0)
      .def_readwrite("r1", &rft::ReselVector::r1)
      .def_readwrite("r2", &rft::ReselVector::r2)
      .def_readwrite("r3", &rft::ReselVector::r3)
      .def("__repr__", [](const rft::ReselVector& r) {
        return "ReselVector(r0=" + std::to_string(r.r0) + ", r1=" + std::to_string(r.r1) +
               ", r2=" + std::to_string(r.r2) + ", r3=" + std::to_string(r.r3) + ")";
      });

  py::register_exception<rft::ThresholdError>(m, "ThresholdError");

  m.def("resel_count_simplified", &rft::resel_count_simplified, "lattice"_a);
  m.def("resel_count_cuboid", &rft::resel_count_cuboid, "extent_resels"_a);
  m.def("ec_density", &rft::ec_density, "d"_a, "t"_a, "field"_a);
  m.def("expected_ec", &rft::expected_ec, "t"_a, "resels"_a, "field"_a);
  m.def("rft_threshold", &rft::rft_threshold, "alpha"_a, "resels"_a, "field"_a);

  // comparator
  py::class_<comparator::ThresholdPair>(m, "ThresholdPair")
      .def_readonly("t_rft", &comparator::ThresholdPair::t_rft)
      .def_readonly("t_bonferroni", &comparator::ThresholdPair::t_bonferroni)
      .def_property_readonly("rft_valid", &comparator::ThresholdPair::rft_valid)
      .def("__repr__", [](const comparator::ThresholdPair& p) {
        return "ThresholdPair(t_rft=" + std::to_string(p.t_rft) +
               ", t_bonferroni=" + std::to_string(p.t_bonferroni) + ")";
      });

  m.def("voxel_count", &comparator::voxel_count, "volume_mm3"_a, "voxel_mm"_a);
  m.def("bonferroni_threshold", &comparator::bonferroni_threshold, "alpha"_a, "n_tests"_a,
        "field"_a);
  m.def("compare_thresholds", &comparator::compare_thresholds, "alpha"_a, "lattice"_a, "field"_a);
  m.def(
      "crossover_smoothness",
      [](double voxel_mm, double nu, double alpha, double volume_mm3) {
        const auto c = comparator::crossover_smoothness(voxel_mm, nu, alpha, volume_mm3);
        const char* status = c.status == comparator::Crossover::Status::found ? "found"
                             : c.status == comparator::Crossover::Status::below_range
                                 ? "below_range"
                                 : "above_range";
        py::dict d("status"_a = status);
        d["ratio"] = c.status == comparator::Crossover::Status::found
                         ? py::object(py::cast(c.ratio))
                         : py::object(py::none());
        return d;
      },
      "voxel_mm"_a, "nu"_a, "alpha"_a, "volume_mm3"_a);
  m.def(
      "sweep",
      [](const std::vector<double>& voxel_sizes, const std::tuple<double, double, double>& nus,
         const std::tuple<double, double, double>& ratios, double alpha, double volume_mm3) {
        const comparator::Range nu_range{std::get<0>(nus), std::get<1>(nus), std::get<2>(nus)};
        const comparator::Range ratio_range{std::get<0>(ratios), std::get<1>(ratios),
                                            std::get<2>(ratios)};
        const auto cells = comparator::sweep(voxel_sizes, nu_range, ratio_range, alpha, volume_mm3);
        py::list out;
        for (const auto& c : cells) {
          py::dict d("voxel_mm"_a = c.voxel_mm, "df"_a = c.nu,
                     "smoothness_ratio"_a = c.smoothness_ratio,
                     "t_bonferroni"_a = c.pair.t_bonferroni, "rft_error"_a = c.rft_error);
          d["t_rft"] = c.rft_error ? py::object(py::none()) : py::object(py::cast(c.pair.t_rft));
          d["rft_valid"] = !c.rft_error && c.pair.rft_valid();
          out.append(std::move(d));
        }
        return out;
      },
      "voxel_sizes"_a, "nu_range"_a, "ratio_range"_a, "alpha"_a = 0.05, "volume_mm3"_a = 1.4e6,
      "Grid of (voxel, df, ratio) cells; range arguments are (start, end, step).");

  // survey
  m.def(
      "prob_meets_assumption",
      [](double mean, double sd, double critical_ratio) {
        return survey::prob_meets_assumption({mean, sd}, critical_ratio);
      },
      "mean"_a, "sd"_a, "critical_ratio"_a);
  m.def(
      "fail_percentage",
      [](double mean, double sd, double critical_ratio,
         const std::tuple<double, double, double>& quantiles) {
        const auto f =
            survey::fail_percentage({mean, sd}, parse_quantiles(quantiles), critical_ratio);
        return py::make_tuple(f.low, f.median, f.high);
      },
      "mean"_a, "sd"_a, "critical_ratio"_a, "quantiles"_a = std::make_tuple(1.26, 1.36, 1.77),
      "Returns (low, median, high) fail percentages; quantiles are (q05, q50, q95).");
  m.def(
      "fit_ratio_model",
      [](const std::vector<double>& ratios) {
        const auto model = survey::fit_ratio_model(ratios);
        return py::make_tuple(model.mean, model.sd);
      },
      "ratios"_a);
  m.def(
      "adjust_model",
      [](double mean, double sd, double multiplier) {
        const auto a = survey::adjust_model({mean, sd}, multiplier);
        return py::make_tuple(a.mean, a.sd);
      },
      "mean"_a, "sd"_a, "multiplier"_a);
  m.def(
      "analyze_survey_file",
      [](const std::string& path, double critical_ratio, const std::string& mode,
         const std::tuple<double, double, double>& quantiles) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open " + path);
        const auto ingested = survey::ingest(in);
        const auto a = survey::analyze(ingested.records, critical_ratio, parse_mode(mode),
                                       parse_quantiles(quantiles));
        py::dict d = analysis_to_dict(a);
        d["n_rejected_rows"] = ingested.rejected.size();
        return d;
      },
      "path"_a, "critical_ratio"_a = 3.5, "mode"_a = "in_plane",
      "quantiles"_a = std::make_tuple(1.26, 1.36, 1.77));

  // fieldsim
  m.def("derive_seed", &fieldsim::derive_seed, "master_seed"_a, "realization"_a, "field_index"_a);
  m.def("realization_seed", &fieldsim::realization_seed, "master_seed"_a, "realization"_a);
  m.def(
      "generate_smooth_field",
      [](const std::array<int, 3>& dims, const std::array<double, 3>& fwhm_vox,
         std::uint64_t seed) {
        return lattice_to_array(fieldsim::generate_smooth_field(dims, fwhm_vox, seed));
      },
      "dims"_a, "fwhm_vox"_a, "seed"_a,
      "Unit-variance smooth Gaussian field as an (nx, ny, nz) array.");
  m.def(
      "generate_t_field",
      [](const std::array<int, 3>& dims, const std::array<double, 3>& fwhm_vox, double nu,
         std::uint64_t seed) {
        return lattice_to_array(fieldsim::generate_t_field(dims, fwhm_vox, nu, seed));
      },
      "dims"_a, "fwhm_vox"_a, "nu"_a, "seed"_a);
  m.def(
      "estimate_fwhm",
      [](const FArray& field, int axis) {
        return fieldsim::estimate_fwhm(array_to_lattice(field), axis);
      },
      "field"_a, "axis"_a);
  m.def(
      "wilson_interval",
      [](std::int64_t successes, std::int64_t trials) {
        const auto [lo, hi] = fieldsim::wilson_interval(successes, trials);
        return py::make_tuple(lo, hi);
      },
      "successes"_a, "trials"_a);
  m.def(
      "empirical_fwe",
      [](const std::array<int, 3>& dims, const std::array<double, 3>& fwhm_vox,
         const std::string& family, int n_realizations, std::uint64_t master_seed,
         const std::vector<double>& thresholds, double nu) {
        fieldsim::SimConfig cfg;
        cfg.dims = dims;
        cfg.fwhm_vox = fwhm_vox;
        cfg.field = parse_family(family, nu);
        cfg.n_realizations = n_realizations;
        cfg.master_seed = master_seed;
        const auto ests = fieldsim::empirical_fwe(cfg, thresholds);
        py::list out;
        for (std::size_t i = 0; i < ests.size(); ++i)
          out.append(py::dict("threshold"_a = thresholds[i], "trials"_a = ests[i].trials,
                              "rejections"_a = ests[i].rejections, "rate"_a = ests[i].rate,
                              "ci_low"_a = ests[i].ci_low, "ci_high"_a = ests[i].ci_high));
        return out;
      },
      "dims"_a, "fwhm_vox"_a, "family"_a, "n_realizations"_a, "master_seed"_a, "thresholds"_a,
      "nu"_a = 0.0, "Empirical FWE per threshold, sharing each realization's maximum.");
}
