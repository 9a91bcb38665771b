#pragma once

#include <optional>
#include <span>
#include <vector>

#include "coinfer/system_model.hpp"

namespace coinfer {

// Source description for the rate-distortion bounds. `dim` is the number of
// parameters q (or q+s for the joint model); entropy is in bits.
struct RdModel {
  double dim = 1.0;
  double entropy_bits = 0.0;
  std::optional<std::vector<double>> scales;  // per-coordinate Laplacian rates
};

struct RateBound {
  double value = 0.0;      // max(unclamped, 0); +inf when distortion == 0
  double unclamped = 0.0;  // may be negative
};

struct BoundResult {
  double value = 0.0;
  std::optional<double> mu_waterlevel;
  int bisection_iters = 0;
};

// Natural log of Gamma(x) for x > 0; thread-safe.
double log_gamma(double x);

// Maximum differential entropy (bits) of a q-dimensional error vector with
// E||z|| <= 1.
double phi_of_one(double dim);

// Lower bound on R(D) for a multivariate Laplacian source under the
// unsquared Frobenius distortion. Throws DomainError for distortion < 0.
RateBound rate_lower_bound(double distortion, const RdModel& m);

// Inverse of rate_lower_bound at a given rate (bits).
double distortion_at_rate(double rate_bits, const RdModel& m);

// Distortion-rate lower bound D̂(rho, rho_server) for the pruned split model.
double distortion_lower_bound(double rho, double rho_server, const ModelProfile& prof);

// log2 of D̂; finite for any valid profile, unlike the value itself which can
// underflow for very large retained rates.
double log2_distortion_lower_bound(double rho, double rho_server, const ModelProfile& prof);

// Rate-distortion function of a scalar zero-mean Laplacian under |w - ŵ|.
double laplacian_scalar_rd(double lambda, double distortion);

// Water-filling bounds for independent (non-identical) Laplacian coordinates.
BoundResult parallel_laplacian_rate_bound(std::span<const double> scales, double distortion);
BoundResult parallel_laplacian_distortion_bound(std::span<const double> scales, double rate_bits);

// Total distortion sum_i min(mu, 1/lambda_i) / sqrt(q) reached at water level mu.
double waterfill_distortion(std::span<const double> scales, double mu);

}  // namespace coinfer
