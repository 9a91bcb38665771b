#include "coinfer/dnn_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "coinfer/error.hpp"

namespace coinfer {
namespace {

constexpr double kRelTol = 1e-12;

void apply_activation(Vector& v, const ActivationSpec& act) {
  switch (act.kind) {
    case Activation::kRelu:
      v = v.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      v = v.array().tanh().matrix();
      break;
    case Activation::kLeakyRelu:
      v = v.unaryExpr([s = act.leaky_slope](double x) { return x >= 0.0 ? x : s * x; });
      break;
    case Activation::kIdentity:
      break;
  }
}

// Flat handle into one weight: layer index plus row-major offset.
struct Slot {
  std::size_t layer;
  Eigen::Index offset;
};

std::vector<Slot> side_slots(const DnnNetwork& net, std::size_t first, std::size_t last) {
  std::vector<Slot> slots;
  for (std::size_t l = first; l < last; ++l) {
    for (Eigen::Index k = 0; k < net.layers()[l].size(); ++k) slots.push_back({l, k});
  }
  return slots;
}

void zero_slots(DnnNetwork& out, std::vector<Slot> slots, double rho, const PruneStrategy& strat,
                std::uint64_t stream) {
  const std::size_t keep = retained_count(rho, slots.size());
  const std::size_t drop = slots.size() - keep;
  if (drop == 0) return;
  auto& layers = out.mutable_layers();
  if (strat.kind == PruneKind::kMagnitude) {
    // Slots are already in ascending flat order, so stable ordering by |w|
    // breaks ties toward the lowest index.
    auto mag = [&](const Slot& s) { return std::abs(layers[s.layer].data()[s.offset]); };
    std::vector<std::size_t> order(slots.size());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
      const double ma = mag(slots[a]);
      const double mb = mag(slots[b]);
      return ma < mb || (ma == mb && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop) - 1,
                     order.end(), less);
    for (std::size_t i = 0; i < drop; ++i) {
      const Slot& s = slots[order[i]];
      layers[s.layer].data()[s.offset] = 0.0;
    }
  } else {
    std::mt19937_64 rng(strat.seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    std::shuffle(slots.begin(), slots.end(), rng);
    for (std::size_t i = 0; i < drop; ++i) {
      layers[slots[i].layer].data()[slots[i].offset] = 0.0;
    }
  }
}

}  // namespace

ActivationSpec parse_activation(const std::string& name, double leaky_slope) {
  if (name == "relu") return {Activation::kRelu, leaky_slope};
  if (name == "tanh") return {Activation::kTanh, leaky_slope};
  if (name == "leaky_relu") return {Activation::kLeakyRelu, leaky_slope};
  if (name == "identity") return {Activation::kIdentity, leaky_slope};
  throw ConfigError("activation", "unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

std::string to_string(PruneKind k) {
  return k == PruneKind::kMagnitude ? "magnitude" : "random";
}

DnnNetwork::DnnNetwork(std::vector<Matrix> layers, ActivationSpec act, std::size_t split_index)
    : layers_(std::move(layers)), act_(act), split_(split_index) {
  if (layers_.empty()) throw DomainError("DnnNetwork: no layers");
  if (split_ < 1 || split_ > layers_.size()) {
    throw DomainError("DnnNetwork: split_index must lie in [1, layer count]");
  }
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].cols() != layers_[l - 1].rows()) {
      throw DomainError("DnnNetwork: layer " + std::to_string(l) +
                        " input dimension does not match previous output");
    }
  }
  if (act_.kind == Activation::kLeakyRelu && !(act_.leaky_slope >= 0.0 && act_.leaky_slope <= 1.0)) {
    throw DomainError("DnnNetwork: leaky slope must lie in [0, 1] to stay 1-Lipschitz");
  }
}

DnnNetwork DnnNetwork::random(std::span<const std::size_t> sizes, ActivationSpec act,
                              std::size_t split_index, std::uint64_t seed, double init_scale) {
  if (sizes.size() < 2) throw DomainError("DnnNetwork::random: need at least two sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double sd = init_scale / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = sd * normal(rng);
    layers.push_back(std::move(w));
  }
  return DnnNetwork(std::move(layers), act, split_index);
}

std::size_t DnnNetwork::device_param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < split_; ++l) n += static_cast<std::size_t>(layers_[l].size());
  return n;
}

std::size_t DnnNetwork::server_param_count() const {
  std::size_t n = 0;
  for (std::size_t l = split_; l < layers_.size(); ++l) {
    n += static_cast<std::size_t>(layers_[l].size());
  }
  return n;
}

bool DnnNetwork::activates_after(std::size_t l) const {
  return l + 1 != split_ && l + 1 != layers_.size();
}

Vector DnnNetwork::forward(const Vector& input) const {
  if (input.size() != input_dim()) throw DomainError("forward: input dimension mismatch");
  Vector a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    a = layers_[l] * a;
    if (activates_after(l)) apply_activation(a, act_);
  }
  return a;
}

std::vector<Vector> DnnNetwork::layer_outputs(const Vector& input) const {
  if (input.size() != input_dim()) throw DomainError("forward: input dimension mismatch");
  std::vector<Vector> outs;
  outs.reserve(layers_.size());
  Vector a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector z = layers_[l] * a;
    outs.push_back(z);
    if (activates_after(l)) apply_activation(z, act_);
    a = std::move(z);
  }
  return outs;
}

std::size_t retained_count(double rho, std::size_t count) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("pruning ratio must lie in [0, 1]");
  const auto keep = static_cast<std::size_t>(std::floor(rho * static_cast<double>(count) + 0.5));
  return std::min(keep, count);
}

DnnNetwork prune(const DnnNetwork& net, double rho_device, double rho_server,
                 const PruneStrategy& strat) {
  retained_count(rho_device, 0);
  retained_count(rho_server, 0);
  DnnNetwork out = net;
  const std::size_t split = net.split_index();
  const std::size_t total = net.layer_count();
  if (strat.per_layer) {
    for (std::size_t l = 0; l < total; ++l) {
      zero_slots(out, side_slots(net, l, l + 1), l < split ? rho_device : rho_server, strat, l);
    }
  } else {
    zero_slots(out, side_slots(net, 0, split), rho_device, strat, 0);
    zero_slots(out, side_slots(net, split, total), rho_server, strat, 1);
  }
  return out;
}

ParamBoundTerms param_distortion_bound(const DnnNetwork& net, const DnnNetwork& pruned) {
  const std::size_t n = net.layer_count();
  if (pruned.layer_count() != n) throw DomainError("param_distortion_bound: layer count mismatch");
  ParamBoundTerms t;
  t.norms.resize(n);
  t.diff_norms.resize(n);
  t.coeffs.resize(n);
  double total_sq = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const Matrix& w = net.layers()[l];
    const Matrix& w_hat = pruned.layers()[l];
    if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols()) {
      throw DomainError("param_distortion_bound: layer shape mismatch");
    }
    t.norms[l] = w.norm();
    const double d = (w - w_hat).norm();
    t.diff_norms[l] = d;
    total_sq += d * d;
  }
  t.total_diff_norm = std::sqrt(total_sq);
  // prefix[l] = prod_{i<l} norms, suffix[l] = prod_{i>l} norms.
  std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
  for (std::size_t l = 0; l < n; ++l) prefix[l + 1] = prefix[l] * t.norms[l];
  for (std::size_t l = n; l-- > 0;) suffix[l] = suffix[l + 1] * t.norms[l];
  for (std::size_t l = 0; l < n; ++l) {
    t.coeffs[l] = prefix[l] * suffix[l + 1];
    t.bound += t.coeffs[l] * t.diff_norms[l];
  }
  return t;
}

std::vector<LayerCheck> verify_layer_bounds(const DnnNetwork& net, const DnnNetwork& pruned,
                                            std::span<const Vector> inputs) {
  const std::size_t n = net.layer_count();
  std::vector<double> norms(n), diff_norms(n);
  for (std::size_t l = 0; l < n; ++l) {
    norms[l] = net.layers()[l].norm();
    diff_norms[l] = (net.layers()[l] - pruned.layers()[l]).norm();
  }
  std::vector<LayerCheck> checks(n);
  for (const Vector& phi : inputs) {
    const auto orig = net.layer_outputs(phi);
    const auto hat = pruned.layer_outputs(phi);
    double prod_before = 1.0;  // prod_{j<l} ||W^(j)||_F
    double prev_dist = 0.0;    // ||f(W^(1:l-1)) - f(Ŵ^(1:l-1))||
    for (std::size_t l = 0; l < n; ++l) {
      const double prod_upto = prod_before * norms[l];
      const double lhs1 = orig[l].norm();
      const double slack1 = prod_upto - lhs1;
      const double dist = (orig[l] - hat[l]).norm();
      const double rhs2 = diff_norms[l] * prod_before + norms[l] * prev_dist;
      const double slack2 = rhs2 - dist;

      LayerCheck& c = checks[l];
      c.norm_worst_slack = std::min(c.norm_worst_slack, slack1);
      c.distortion_worst_slack = std::min(c.distortion_worst_slack, slack2);
      if (lhs1 > prod_upto * (1.0 + kRelTol) + kRelTol) c.norm_pass = false;
      if (dist > rhs2 * (1.0 + kRelTol) + kRelTol) c.distortion_pass = false;

      prod_before = prod_upto;
      prev_dist = dist;
    }
  }
  return checks;
}

BoundReport check_output_bound(const DnnNetwork& net, const DnnNetwork& pruned,
                           std::span<const Vector> inputs) {
  BoundReport rep;
  rep.param = param_distortion_bound(net, pruned);
  rep.output_distortion.reserve(inputs.size());
  for (const Vector& phi : inputs) {
    const double d = (net.forward(phi) - pruned.forward(phi)).norm();
    rep.output_distortion.push_back(d);
    rep.max_output_distortion = std::max(rep.max_output_distortion, d);
  }
  const double bound = rep.param.bound;
  rep.holds = rep.max_output_distortion <= bound * (1.0 + kRelTol) + kRelTol;
  rep.gap_factor = rep.max_output_distortion > 0.0 ? bound / rep.max_output_distortion
                   : bound > 0.0                   ? std::numeric_limits<double>::infinity()
                                                   : 1.0;
  return rep;
}

std::vector<BoundReport> verify_output_bound(const DnnNetwork& net, std::span<const Vector> inputs,
                                         std::span<const double> rho_grid,
                                         std::span<const PruneStrategy> strategies) {
  std::vector<BoundReport> out;
  for (const PruneStrategy& strat : strategies) {
    for (double rho : rho_grid) {
      const DnnNetwork pruned = prune(net, rho, rho, strat);
      BoundReport rep = check_output_bound(net, pruned, inputs);
      rep.rho = rho;
      rep.strategy = strat.kind;
      out.push_back(std::move(rep));
    }
  }
  return out;
}

namespace {

// Net whose weights are Ω + h Δ, layer by layer.
DnnNetwork shifted(const DnnNetwork& net, const std::vector<Matrix>& delta, double h) {
  std::vector<Matrix> layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) layers[l] += h * delta[l];
  return DnnNetwork(std::move(layers), net.activation(), net.split_index());
}

Vector central_jvp(const DnnNetwork& net, const std::vector<Matrix>& delta, const Vector& phi,
                   double h) {
  return (shifted(net, delta, h).forward(phi) - shifted(net, delta, -h).forward(phi)) / (2.0 * h);
}

double jacobian_frobenius(const DnnNetwork& net, const Vector& phi, double h) {
  DnnNetwork probe = net;
  double sq = 0.0;
  for (std::size_t l = 0; l < probe.layer_count(); ++l) {
    Matrix& w = probe.mutable_layers()[l];
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double saved = w.data()[k];
      w.data()[k] = saved + h;
      const Vector plus = probe.forward(phi);
      w.data()[k] = saved - h;
      const Vector minus = probe.forward(phi);
      w.data()[k] = saved;
      sq += ((plus - minus) / (2.0 * h)).squaredNorm();
    }
  }
  return std::sqrt(sq);
}

}  // namespace

GradientReport gradient_distortion_estimate(const DnnNetwork& net, const DnnNetwork& pruned,
                                            std::span<const Vector> inputs, double fd_step) {
  if (!(fd_step > 0.0)) throw DomainError("gradient_distortion_estimate: fd_step must be > 0");
  std::vector<Matrix> delta;
  double delta_sq = 0.0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    delta.push_back(pruned.layers()[l] - net.layers()[l]);
    delta_sq += delta.back().squaredNorm();
  }
  GradientReport rep;
  rep.delta_norm = std::sqrt(delta_sq);

  for (const Vector& phi : inputs) {
    const Vector jvp = central_jvp(net, delta, phi, fd_step);
    const Vector jvp_half = central_jvp(net, delta, phi, 0.5 * fd_step);
    const double scale = std::max(jvp_half.norm(), 1e-12 * (1.0 + rep.delta_norm));
    if ((jvp - jvp_half).norm() > 0.1 * scale) {
      throw NumericError("gradient_distortion_estimate: finite-difference step too large "
                         "(halving the step changed the estimate by more than 10%)");
    }
    const double truth = (pruned.forward(phi) - net.forward(phi)).norm();
    rep.jvp_norm.push_back(jvp_half.norm());
    rep.true_distortion.push_back(truth);
    if (truth > 0.0) {
      rep.max_relative_gap =
          std::max(rep.max_relative_gap, std::abs(jvp_half.norm() - truth) / truth);
    }
  }

  if (net.param_count() <= kMaxJacobianParams) {
    double g = 0.0;
    for (const Vector& phi : inputs) g = std::max(g, jacobian_frobenius(net, phi, fd_step));
    rep.gradient_bound = g;
    for (double j : rep.jvp_norm) {
      if (j > g * rep.delta_norm * (1.0 + 1e-6) + 1e-9) rep.bound_ok = false;
    }
  }
  return rep;
}

std::vector<Vector> sample_unit_ball(Eigen::Index dim, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v[k] = normal(rng);
    const double nrm = v.norm();
    const double radius = std::pow(unif(rng), 1.0 / static_cast<double>(dim));
    out.push_back(nrm > 0.0 ? Vector(v * (radius / nrm)) : Vector::Zero(dim));
  }
  return out;
}

}  // namespace coinfer
