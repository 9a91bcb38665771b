#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace coinfer {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh, kLeakyRelu, kIdentity };

struct ActivationSpec {
  Activation kind = Activation::kRelu;
  double leaky_slope = 0.01;  // only for kLeakyRelu; must lie in [0, 1]
};

ActivationSpec parse_activation(const std::string& name, double leaky_slope = 0.01);
std::string to_string(Activation a);

// Bias-free fully connected stack. Layers [0, split_index) run on the device,
// the rest on the server. Layer l maps R^{cols} -> R^{rows}. The activation is
// applied between layers except across the split boundary and after the last
// layer, so the device output is handed to the server untouched.
class DnnNetwork {
 public:
  DnnNetwork(std::vector<Matrix> layers, ActivationSpec act, std::size_t split_index);

  // Gaussian weights with std init_scale / sqrt(fan_in).
  static DnnNetwork random(std::span<const std::size_t> sizes, ActivationSpec act,
                           std::size_t split_index, std::uint64_t seed, double init_scale = 1.0);

  const std::vector<Matrix>& layers() const { return layers_; }
  std::vector<Matrix>& mutable_layers() { return layers_; }
  const ActivationSpec& activation() const { return act_; }
  std::size_t split_index() const { return split_; }
  std::size_t layer_count() const { return layers_.size(); }
  Eigen::Index input_dim() const { return layers_.front().cols(); }
  Eigen::Index output_dim() const { return layers_.back().rows(); }

  std::size_t device_param_count() const;
  std::size_t server_param_count() const;
  std::size_t param_count() const { return device_param_count() + server_param_count(); }

  Vector forward(const Vector& input) const;

  // outputs[l] = f(input, Ω^(1:l+1)), i.e. the pre-activation output of layer l.
  std::vector<Vector> layer_outputs(const Vector& input) const;

  // Whether the activation follows layer l (0-based).
  bool activates_after(std::size_t l) const;

 private:
  std::vector<Matrix> layers_;
  ActivationSpec act_;
  std::size_t split_;
};

enum class PruneKind { kMagnitude, kRandom };

struct PruneStrategy {
  PruneKind kind = PruneKind::kMagnitude;
  std::uint64_t seed = 0;
  bool per_layer = false;  // rank within each layer instead of per side
};

std::string to_string(PruneKind k);

// Number of entries kept out of `count` at ratio rho (round half up).
std::size_t retained_count(double rho, std::size_t count);

// Zeroes the (1 - rho) fraction of device entries and (1 - rho_server) of
// server entries. Magnitude pruning removes the smallest |w| first, ties going
// to the lowest row-major flat index within the side.
DnnNetwork prune(const DnnNetwork& net, double rho_device, double rho_server,
                 const PruneStrategy& strat);

struct ParamBoundTerms {
  double bound = 0.0;                 // sum_l coeff[l] * diff_norms[l]
  std::vector<double> coeffs;         // prod_{i != l} ||Ω^(i)||_F
  std::vector<double> norms;          // ||Ω^(l)||_F of the original net
  std::vector<double> diff_norms;     // ||Ω^(l) - Ω̂^(l)||_F
  double total_diff_norm = 0.0;       // ||Ω - Ω̂||_F over all layers
};

ParamBoundTerms param_distortion_bound(const DnnNetwork& net, const DnnNetwork& pruned);

struct LayerCheck {
  double norm_worst_slack = kNoSlack;  // min over inputs of rhs - lhs
  double distortion_worst_slack = kNoSlack;
  bool norm_pass = true;
  bool distortion_pass = true;

  static constexpr double kNoSlack = 1e300;
};

// Per-layer output-norm and output-distortion inequalities over all inputs.
std::vector<LayerCheck> verify_layer_bounds(const DnnNetwork& net, const DnnNetwork& pruned,
                                            std::span<const Vector> inputs);

struct BoundReport {
  double rho = 1.0;
  PruneKind strategy = PruneKind::kMagnitude;
  std::vector<double> output_distortion;  // one per input
  double max_output_distortion = 0.0;
  ParamBoundTerms param;
  double gap_factor = 1.0;  // bound / max output distortion (1 when both are 0)
  bool holds = true;
};

BoundReport check_output_bound(const DnnNetwork& net, const DnnNetwork& pruned,
                           std::span<const Vector> inputs);

// Sweeps rho = rho_server over the grid for every strategy.
std::vector<BoundReport> verify_output_bound(const DnnNetwork& net, std::span<const Vector> inputs,
                                         std::span<const double> rho_grid,
                                         std::span<const PruneStrategy> strategies);

struct GradientReport {
  std::vector<double> jvp_norm;          // ||J vec(Ω̂ - Ω)|| per input
  std::vector<double> true_distortion;   // ||f(Ω̂) - f(Ω)|| per input
  double delta_norm = 0.0;               // ||Ω̂ - Ω||_F
  std::optional<double> gradient_bound;  // G, max over inputs of ||J||_F
  bool bound_ok = true;                  // jvp <= G ||ΔΩ|| (+ tolerance)
  double max_relative_gap = 0.0;         // max |jvp - true| / true over inputs
};

inline constexpr std::size_t kMaxJacobianParams = 50000;

// First-order output-distortion estimate via central finite differences along
// ΔΩ, plus a full-Jacobian estimate of G for small nets. Throws NumericError
// when halving the step changes the estimate by more than 10%.
GradientReport gradient_distortion_estimate(const DnnNetwork& net, const DnnNetwork& pruned,
                                            std::span<const Vector> inputs, double fd_step);

// Uniform samples from the closed unit ball in R^dim.
std::vector<Vector> sample_unit_ball(Eigen::Index dim, std::size_t count, std::uint64_t seed);

}  // namespace coinfer
