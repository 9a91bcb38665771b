#include "coinfer/rd_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "coinfer/error.hpp"

namespace coinfer {
namespace {

constexpr double kLn2 = std::numbers::ln2;
// log2(sqrt(pi) * e)
const double kLog2SqrtPiE = std::log2(std::sqrt(std::numbers::pi) * std::numbers::e);

constexpr double kBracketEps = 1e-12;
constexpr int kMaxBisection = 200;

void check_scales(std::span<const double> scales) {
  if (scales.empty()) throw DomainError("parallel Laplacian: empty scale vector");
  for (double l : scales) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw DomainError("parallel Laplacian: scales must be finite and > 0");
    }
  }
}

double sum_inverse(std::span<const double> scales) {
  double s = 0.0;
  for (double l : scales) s += 1.0 / l;
  return s;
}

// Sum over saturated-free coordinates of -log2(lambda_i mu).
double waterfill_rate(std::span<const double> scales, double mu) {
  double r = 0.0;
  for (double l : scales) {
    if (mu < 1.0 / l) r -= std::log2(l * mu);
  }
  return r;
}

std::string bisection_diagnostics(const char* what, double lo, double hi, double residual) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": bisection did not converge (bracket [" << lo << ", " << hi
     << "], residual " << residual << ")";
  return os.str();
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be > 0");
  return boost::math::lgamma(x);
}

double phi_of_one(double dim) {
  if (!(dim >= 1.0)) throw DomainError("phi_of_one: dim must be >= 1");
  const double q = dim;
  return q * (kLog2SqrtPiE - std::log2(q)) + 1.0 +
         (log_gamma(q) - log_gamma(q / 2.0)) / kLn2;
}

RateBound rate_lower_bound(double distortion, const RdModel& m) {
  if (std::isnan(distortion) || distortion < 0.0) {
    throw DomainError("rate_lower_bound: distortion must be >= 0");
  }
  if (!(m.dim >= 1.0)) throw DomainError("rate_lower_bound: dim must be >= 1");
  if (distortion == 0.0) return {kInf, kInf};
  // h(w) - Phi(D) with Phi(D) = Phi(1) + q log2 D.
  const double r = m.entropy_bits - phi_of_one(m.dim) - m.dim * std::log2(distortion);
  return {std::max(r, 0.0), r};
}

double distortion_at_rate(double rate_bits, const RdModel& m) {
  if (!(m.dim >= 1.0)) throw DomainError("distortion_at_rate: dim must be >= 1");
  return std::exp2((m.entropy_bits - phi_of_one(m.dim) - rate_bits) / m.dim);
}

double log2_distortion_lower_bound(double rho, double rho_server, const ModelProfile& prof) {
  const double n = prof.total_params();
  if (!(n > 0.0)) throw DomainError("distortion_lower_bound: q + s must be > 0");
  const double rate = (rho * prof.q_device_params + rho_server * prof.s_server_params) *
                      prof.bits_per_param;
  // (Gamma(n/2) / (2 Gamma(n)))^(1/n), kept in the log domain.
  const double log2_gamma_ratio =
      (log_gamma(n / 2.0) - kLn2 - log_gamma(n)) / (n * kLn2);
  return std::log2(n) - kLog2SqrtPiE - (rate - prof.entropy_bits) / n + log2_gamma_ratio;
}

double distortion_lower_bound(double rho, double rho_server, const ModelProfile& prof) {
  return std::exp2(log2_distortion_lower_bound(rho, rho_server, prof));
}

double laplacian_scalar_rd(double lambda, double distortion) {
  if (!(lambda > 0.0)) throw DomainError("laplacian_scalar_rd: lambda must be > 0");
  if (std::isnan(distortion) || distortion < 0.0) {
    throw DomainError("laplacian_scalar_rd: distortion must be >= 0");
  }
  if (distortion == 0.0) return kInf;
  if (distortion >= 1.0 / lambda) return 0.0;
  return -std::log2(lambda * distortion);
}

double waterfill_distortion(std::span<const double> scales, double mu) {
  double d = 0.0;
  for (double l : scales) d += std::min(mu, 1.0 / l);
  return d / std::sqrt(static_cast<double>(scales.size()));
}

BoundResult parallel_laplacian_rate_bound(std::span<const double> scales, double distortion) {
  check_scales(scales);
  if (!(distortion > 0.0)) {
    throw DomainError("parallel_laplacian_rate_bound: distortion must be > 0");
  }
  const auto [min_it, max_it] = std::minmax_element(scales.begin(), scales.end());
  const double hi_mu = 1.0 / *min_it;  // max 1/lambda
  const double lo_mu = kBracketEps / *max_it;
  const double sqrt_q = std::sqrt(static_cast<double>(scales.size()));

  BoundResult out;
  if (distortion >= waterfill_distortion(scales, hi_mu)) {
    out.value = 0.0;
    out.mu_waterlevel = hi_mu;
    return out;
  }
  double mu;
  if (distortion <= waterfill_distortion(scales, lo_mu)) {
    // Every coordinate is below its saturation point.
    mu = distortion / sqrt_q;
  } else {
    double lo = lo_mu;
    double hi = hi_mu;
    int it = 0;
    for (; it < kMaxBisection && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
         ++it) {
      const double mid = 0.5 * (lo + hi);
      if (waterfill_distortion(scales, mid) < distortion) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    mu = 0.5 * (lo + hi);
    out.bisection_iters = it;
    const double residual = std::abs(waterfill_distortion(scales, mu) - distortion);
    if (residual > 1e-12 * sum_inverse(scales)) {
      throw NumericError(bisection_diagnostics("parallel_laplacian_rate_bound", lo, hi, residual));
    }
  }
  double rate = 0.0;
  for (double l : scales) rate += std::max(-std::log2(l * mu), 0.0);
  out.value = rate;
  out.mu_waterlevel = mu;
  return out;
}

BoundResult parallel_laplacian_distortion_bound(std::span<const double> scales, double rate_bits) {
  check_scales(scales);
  if (std::isnan(rate_bits) || rate_bits < 0.0) {
    throw DomainError("parallel_laplacian_distortion_bound: rate must be >= 0");
  }
  const auto [min_it, max_it] = std::minmax_element(scales.begin(), scales.end());
  const double hi_mu = 1.0 / *min_it;
  const double lo_mu = kBracketEps / *max_it;
  const double q = static_cast<double>(scales.size());

  BoundResult out;
  double mu;
  if (rate_bits == 0.0) {
    mu = hi_mu;
  } else if (rate_bits >= waterfill_rate(scales, lo_mu)) {
    double sum_log = 0.0;
    for (double l : scales) sum_log += std::log2(l);
    mu = std::exp2(-(rate_bits + sum_log) / q);
  } else {
    // Rate is decreasing in mu; bisect in log2(mu).
    double lo = std::log2(lo_mu);
    double hi = std::log2(hi_mu);
    int it = 0;
    for (; it < kMaxBisection && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (waterfill_rate(scales, std::exp2(mid)) > rate_bits) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.bisection_iters = it;
    mu = std::exp2(0.5 * (lo + hi));
    const double residual = std::abs(waterfill_rate(scales, mu) - rate_bits);
    if (residual > 1e-9 * std::max(1.0, rate_bits)) {
      throw NumericError(
          bisection_diagnostics("parallel_laplacian_distortion_bound", lo, hi, residual));
    }
  }
  out.value = waterfill_distortion(scales, mu);
  out.mu_waterlevel = mu;
  return out;
}

}  // namespace coinfer
