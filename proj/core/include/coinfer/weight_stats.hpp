#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coinfer {

struct WeightSample {
  std::vector<double> values;
  // Optional per-value group tag (e.g. layer name); same length as values.
  std::optional<std::vector<std::string>> labels;
};

struct LaplaceFit {
  double mean = 0.0;   // location (sample median)
  double scale = 0.0;  // rate lambda = 1 / mean absolute deviation
};

struct GaussFit {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

enum class Family { kLaplace, kGauss };

struct FitReport {
  double laplace_scale = 0.0;
  double laplace_mean = 0.0;
  double gauss_mean = 0.0;
  double gauss_std = 0.0;
  double loglik_laplace = 0.0;  // nats
  double loglik_gauss = 0.0;    // nats
  double entropy_bits_per_param = 0.0;
  std::size_t count = 0;

  Family preferred() const {
    return loglik_laplace >= loglik_gauss ? Family::kLaplace : Family::kGauss;
  }
};

LaplaceFit fit_laplacian(std::span<const double> values);
GaussFit fit_gaussian(std::span<const double> values);
FitReport compare_fits(std::span<const double> values);

inline LaplaceFit fit_laplacian(const WeightSample& s) { return fit_laplacian(s.values); }
inline GaussFit fit_gaussian(const WeightSample& s) { return fit_gaussian(s.values); }
inline FitReport compare_fits(const WeightSample& s) { return compare_fits(s.values); }

// Per-label fits; groups are fitted concurrently on up to `workers` threads.
std::map<std::string, FitReport> fit_by_group(const WeightSample& sample, unsigned workers = 1);

// Differential entropy in bits of independent Laplacian coordinates.
double entropy_parallel_laplacian(std::span<const double> scales);

// Reads little-endian float32 for `.bin`/`.f32`, otherwise one value per line
// (blank lines and `#` comments skipped). Throws ConfigError on bad input.
WeightSample load_weight_sample(const std::filesystem::path& path);

}  // namespace coinfer
