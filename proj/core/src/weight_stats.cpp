#include "coinfer/weight_stats.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "coinfer/error.hpp"

namespace coinfer {
namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

LaplaceFit fit_laplacian(std::span<const double> values) {
  if (values.empty()) throw DomainError("fit_laplacian: empty sample");
  const double med = median_of(std::vector<double>(values.begin(), values.end()));
  double mad = 0.0;
  for (double v : values) mad += std::abs(v - med);
  mad /= static_cast<double>(values.size());
  if (!(mad > 0.0)) throw DomainError("fit_laplacian: degenerate sample (all values identical)");
  return {med, 1.0 / mad};
}

GaussFit fit_gaussian(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("fit_gaussian: need at least two values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw DomainError("fit_gaussian: degenerate sample (all values identical)");
  return {mean, sd};
}

FitReport compare_fits(std::span<const double> values) {
  const LaplaceFit lap = fit_laplacian(values);
  const GaussFit gau = fit_gaussian(values);
  const double n = static_cast<double>(values.size());

  FitReport rep;
  rep.count = values.size();
  rep.laplace_mean = lap.mean;
  rep.laplace_scale = lap.scale;
  rep.gauss_mean = gau.mean;
  rep.gauss_std = gau.std;

  double abs_dev = 0.0;
  for (double v : values) abs_dev += std::abs(v - lap.mean);
  rep.loglik_laplace = n * std::log(lap.scale / 2.0) - lap.scale * abs_dev;
  rep.loglik_gauss = -0.5 * n * std::log(2.0 * std::numbers::pi * gau.std * gau.std) - 0.5 * n;
  rep.entropy_bits_per_param = std::log2(2.0 * std::numbers::e / lap.scale);
  return rep;
}

std::map<std::string, FitReport> fit_by_group(const WeightSample& sample, unsigned workers) {
  std::map<std::string, std::vector<double>> groups;
  if (!sample.labels) {
    groups.emplace("all", sample.values);
  } else {
    if (sample.labels->size() != sample.values.size()) {
      throw DomainError("fit_by_group: labels and values differ in length");
    }
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
      groups[(*sample.labels)[i]].push_back(sample.values[i]);
    }
  }

  std::vector<const std::string*> keys;
  for (const auto& [k, _] : groups) keys.push_back(&k);
  std::vector<FitReport> reports(keys.size());
  std::vector<std::exception_ptr> errors(keys.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      try {
        reports[i] = compare_fits(groups.at(*keys[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, keys.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::map<std::string, FitReport> out;
  for (std::size_t i = 0; i < keys.size(); ++i) out.emplace(*keys[i], reports[i]);
  return out;
}

double entropy_parallel_laplacian(std::span<const double> scales) {
  double h = 0.0;
  for (double l : scales) {
    if (!(l > 0.0)) throw DomainError("entropy_parallel_laplacian: scales must be > 0");
    h += std::log2(2.0 * std::numbers::e / l);
  }
  return h;
}

WeightSample load_weight_sample(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  WeightSample out;
  if (ext == ".bin" || ext == ".f32") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open weight file");
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) {
      throw ConfigError(path.string(), "binary weight file size is not a multiple of 4");
    }
    out.values.reserve(bytes.size() / 4);
    for (std::size_t off = 0; off < bytes.size(); off += 4) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + off, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      out.values.push_back(static_cast<double>(std::bit_cast<float>(bits)));
    }
  } else {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open weight file");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream is(line);
      double v;
      if (!(is >> v)) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno), "not a number");
      }
      out.values.push_back(v);
    }
  }
  if (out.values.empty()) throw ConfigError(path.string(), "weight file contains no values");
  return out;
}

}  // namespace coinfer
