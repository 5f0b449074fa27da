#include "latticefwe/fieldsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

namespace latticefwe::fieldsim {

namespace {

constexpr double kFwhmToSigma = 0.42466090014400953;  // 1/sqrt(8 ln 2)

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int pad_for(double fwhm) {
  if (fwhm == 0.0) return 0;
  return static_cast<int>(std::ceil(3.0 * fwhm * kFwhmToSigma));
}

// exp(-j^2 / (2 sigma^2)) for j in [-radius, radius], unit L2 norm.
std::vector<double> kernel_for(double fwhm, int radius) {
  const double sigma = fwhm * kFwhmToSigma;
  std::vector<double> w(2 * radius + 1);
  double ss = 0;
  for (int j = -radius; j <= radius; ++j) {
    const double v = std::exp(-0.5 * j * j / (sigma * sigma));
    w[j + radius] = v;
    ss += v * v;
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (double& v : w) v *= inv;
  return w;
}

}  // namespace

Lattice Lattice::zeros(const std::array<int, 3>& dims) {
  for (int d : dims)
    if (d < 1) throw std::domain_error("Lattice: dims must be >= 1");
  Lattice f;
  f.dims = dims;
  f.data.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0);
  return f;
}

double Lattice::max_value() const {
  if (data.empty()) throw std::domain_error("Lattice: empty field has no maximum");
  return *std::max_element(data.begin(), data.end());
}

void SimConfig::validate() const {
  bool smoothed = false;
  for (double f : fwhm_vox) {
    if (f < 0.0) throw std::domain_error("SimConfig: fwhm_vox must be >= 0");
    if (f > 0.0) smoothed = true;
  }
  for (int d : dims) {
    if (d < 1) throw std::domain_error("SimConfig: dims must be >= 1");
    if (smoothed && d < 8)
      throw std::domain_error("SimConfig: dims must each be >= 8 when smoothing is applied");
  }
  if (n_realizations < 1) throw std::domain_error("SimConfig: n_realizations must be >= 1");
  if (field.family == rft::FieldFamily::StudentT &&
      (field.nu < 2.0 || field.nu != std::floor(field.nu)))
    throw std::domain_error("SimConfig: t-field construction needs integer nu >= 2");
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t realization,
                          std::uint64_t field_index) {
  return mix64(mix64(mix64(master_seed) ^ realization) ^ field_index);
}

std::uint64_t realization_seed(std::uint64_t master_seed, std::uint64_t realization) {
  return mix64(mix64(master_seed) ^ realization);
}

Lattice generate_smooth_field(const std::array<int, 3>& dims,
                              const std::array<double, 3>& fwhm_vox, std::uint64_t seed,
                              std::size_t memory_budget_bytes) {
  bool smoothed = false;
  for (double f : fwhm_vox) {
    if (f < 0.0) throw std::domain_error("generate_smooth_field: fwhm_vox must be >= 0");
    if (f > 0.0) smoothed = true;
  }
  std::array<int, 3> pad{};
  std::array<int, 3> padded{};
  std::size_t n_padded = 1;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw std::domain_error("generate_smooth_field: dims must be >= 1");
    if (smoothed && dims[a] < 8)
      throw std::domain_error(
          "generate_smooth_field: dims must each be >= 8 when smoothing is applied");
    pad[a] = pad_for(fwhm_vox[a]);
    padded[a] = dims[a] + 2 * pad[a];
    n_padded *= static_cast<std::size_t>(padded[a]);
  }
  // Two working buffers of the padded size dominate the footprint.
  if (2 * n_padded * sizeof(double) > memory_budget_bytes)
    throw std::length_error("generate_smooth_field: padded lattice exceeds the memory budget (" +
                            std::to_string(2 * n_padded * sizeof(double)) + " > " +
                            std::to_string(memory_budget_bytes) + " bytes)");

  Lattice work = Lattice::zeros(padded);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : work.data) v = gauss(rng);

  if (smoothed) {
    Lattice temp = Lattice::zeros(padded);
    const std::array<std::ptrdiff_t, 3> stride{
        1, padded[0], static_cast<std::ptrdiff_t>(padded[0]) * padded[1]};
    for (int a = 0; a < 3; ++a) {
      const int r = pad[a];
      if (r == 0) continue;
      const std::vector<double> w = kernel_for(fwhm_vox[a], r);
      const double* in = work.data.data();
      // Valid only where the kernel sits fully inside; elsewhere the noise is
      // copied through and later cropped away.
      for (int z = 0; z < padded[2]; ++z)
        for (int y = 0; y < padded[1]; ++y)
          for (int x = 0; x < padded[0]; ++x) {
            const std::size_t i = work.index(x, y, z);
            const int c = a == 0 ? x : a == 1 ? y : z;
            if (c < r || c >= padded[a] - r) {
              temp.data[i] = in[i];
              continue;
            }
            double acc = 0;
            for (int j = -r; j <= r; ++j)
              acc += w[static_cast<std::size_t>(j + r)] *
                     in[static_cast<std::ptrdiff_t>(i) + j * stride[a]];
            temp.data[i] = acc;
          }
      std::swap(work.data, temp.data);
    }
  }

  Lattice out = Lattice::zeros(dims);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x)
        out.at(x, y, z) = work.at(x + pad[0], y + pad[1], z + pad[2]);
  return out;
}

Lattice one_sample_t_field(std::span<const Lattice> components) {
  if (components.size() < 3)
    throw std::invalid_argument("one_sample_t_field: need >= 3 component fields (nu >= 2)");
  const std::array<int, 3> dims = components[0].dims;
  for (const Lattice& f : components)
    if (f.dims != dims)
      throw std::invalid_argument("one_sample_t_field: component dims differ");
  const double n = static_cast<double>(components.size());
  const double sqrt_n = std::sqrt(n);
  Lattice t = Lattice::zeros(dims);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    double mean = 0;
    for (const Lattice& f : components) mean += f.data[i];
    mean /= n;
    double ss = 0;
    for (const Lattice& f : components) {
      const double d = f.data[i] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    t.data[i] = mean / (sd / sqrt_n);
  }
  return t;
}

Lattice generate_t_field(const std::array<int, 3>& dims, const std::array<double, 3>& fwhm_vox,
                         double nu, std::uint64_t seed, std::size_t memory_budget_bytes) {
  if (nu < 2.0 || nu != std::floor(nu))
    throw std::domain_error("generate_t_field: needs integer nu >= 2");
  const int n = static_cast<int>(nu) + 1;
  std::vector<Lattice> components;
  components.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f)
    components.push_back(generate_smooth_field(dims, fwhm_vox,
                                               mix64(seed ^ static_cast<std::uint64_t>(f)),
                                               memory_budget_bytes));
  return one_sample_t_field(components);
}

double estimate_fwhm(const Lattice& field, int axis) {
  if (axis < 0 || axis > 2) throw std::domain_error("estimate_fwhm: axis must be 0, 1 or 2");
  if (field.dims[axis] < 2)
    throw std::domain_error("estimate_fwhm: need >= 2 voxels along the axis");
  const std::array<int, 3>& d = field.dims;
  const std::size_t stride = axis == 0 ? 1
                             : axis == 1
                                 ? static_cast<std::size_t>(d[0])
                                 : static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]);
  double sum = 0, ss = 0;
  std::size_t n = 0;
  for (int z = 0; z < d[2] - (axis == 2 ? 1 : 0); ++z)
    for (int y = 0; y < d[1] - (axis == 1 ? 1 : 0); ++y)
      for (int x = 0; x < d[0] - (axis == 0 ? 1 : 0); ++x) {
        const std::size_t i = field.index(x, y, z);
        const double diff = field.data[i + stride] - field.data[i];
        sum += diff;
        ss += diff * diff;
        ++n;
      }
  const double mean = sum / static_cast<double>(n);
  const double var = (ss - sum * mean) / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw std::domain_error("estimate_fwhm: difference variance is zero");
  return std::sqrt(4.0 * std::log(2.0) / var);
}

std::pair<double, double> wilson_interval(std::int64_t successes, std::int64_t trials) {
  if (trials < 1) throw std::domain_error("wilson_interval: trials must be >= 1");
  if (successes < 0 || successes > trials)
    throw std::domain_error("wilson_interval: successes must be in [0, trials]");
  constexpr double z = 1.959963984540054;  // 97.5% normal quantile
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2n = z * z / n;
  const double center = (p + 0.5 * z2n) / (1.0 + z2n);
  const double half = z / (1.0 + z2n) * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n);
  // The exact interval brackets p and stays inside [0, 1]; rounding can
  // poke out by an ulp at the ends (e.g. successes = 0), so clamp.
  return {std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
}

std::vector<FweEstimate> empirical_fwe(const SimConfig& config,
                                       std::span<const double> thresholds) {
  config.validate();
  if (thresholds.empty()) throw std::invalid_argument("empirical_fwe: no thresholds given");
  std::vector<std::int64_t> rejections(thresholds.size(), 0);
  for (int r = 0; r < config.n_realizations; ++r) {
    const std::uint64_t rs = realization_seed(config.master_seed, static_cast<std::uint64_t>(r));
    const Lattice field =
        config.field.family == rft::FieldFamily::Gaussian
            ? generate_smooth_field(config.dims, config.fwhm_vox, mix64(rs ^ 0ULL),
                                    config.memory_budget_bytes)
            : generate_t_field(config.dims, config.fwhm_vox, config.field.nu, rs,
                               config.memory_budget_bytes);
    const double peak = field.max_value();
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      if (peak >= thresholds[k]) ++rejections[k];
  }
  std::vector<FweEstimate> out(thresholds.size());
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    FweEstimate& e = out[k];
    e.rejections = rejections[k];
    e.trials = config.n_realizations;
    e.rate = static_cast<double>(e.rejections) / static_cast<double>(e.trials);
    std::tie(e.ci_low, e.ci_high) = wilson_interval(e.rejections, e.trials);
  }
  return out;
}

FweEstimate empirical_fwe(const SimConfig& config, double threshold) {
  return empirical_fwe(config, std::span<const double>(&threshold, 1)).front();
}

namespace {

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_sim_csv(std::ostream& out, const SimConfig& config,
                   std::span<const double> thresholds, std::span<const FweEstimate> estimates) {
  if (thresholds.size() != estimates.size())
    throw std::invalid_argument("write_sim_csv: thresholds/estimates size mismatch");
  out << "trials,rejections,rate,ci_low,ci_high,threshold,dims,fwhm_vox,family,nu,master_seed\n";
  const std::string dims = std::to_string(config.dims[0]) + "x" + std::to_string(config.dims[1]) +
                           "x" + std::to_string(config.dims[2]);
  const std::string fwhm =
      g6(config.fwhm_vox[0]) + "x" + g6(config.fwhm_vox[1]) + "x" + g6(config.fwhm_vox[2]);
  const bool gaussian = config.field.family == rft::FieldFamily::Gaussian;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const FweEstimate& e = estimates[k];
    out << e.trials << ',' << e.rejections << ',' << g6(e.rate) << ',' << g6(e.ci_low) << ','
        << g6(e.ci_high) << ',' << g6(thresholds[k]) << ',' << dims << ',' << fwhm << ','
        << (gaussian ? "gaussian" : "student_t") << ',' << (gaussian ? "inf" : g6(config.field.nu))
        << ',' << config.master_seed << '\n';
  }
}

}  // namespace latticefwe::fieldsim
