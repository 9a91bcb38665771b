#include <cmath>
#include <vector>

#include "coinfer/dnn_verify.hpp"
#include "coinfer/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coinfer;

namespace {

std::vector<Vector> inputs_for(const DnnNetwork& net, std::size_t n, std::uint64_t seed) {
  return sample_unit_ball(net.input_dim(), n, seed);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("activation names") {
  CHECK(parse_activation("relu").kind == Activation::kRelu);
  CHECK(parse_activation("tanh").kind == Activation::kTanh);
  CHECK(parse_activation("leaky_relu", 0.2).leaky_slope == 0.2);
  CHECK(to_string(parse_activation("identity").kind) == "identity");
  CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
}

TEST_CASE("network construction rejects bad shapes") {
  Matrix a(3, 2), b(4, 4);
  a.setOnes();
  b.setOnes();
  CHECK_THROWS_AS(DnnNetwork({a, b}, {}, 1), DomainError);
  CHECK_THROWS_AS(DnnNetwork({a}, {}, 0), DomainError);
  CHECK_THROWS_AS(DnnNetwork({a}, {}, 2), DomainError);
  CHECK_THROWS_AS(DnnNetwork({a}, {Activation::kLeakyRelu, 1.5}, 1), DomainError);
}

TEST_CASE("forward pass agrees with the loop oracle") {
  const std::vector<std::size_t> sizes{6, 9, 7, 5, 3};
  for (Activation act : {Activation::kRelu, Activation::kTanh, Activation::kLeakyRelu,
                         Activation::kIdentity}) {
    for (std::size_t split = 1; split <= 4; ++split) {
      const DnnNetwork net = DnnNetwork::random(sizes, {act, 0.1}, split, 11 + split);
      for (const Vector& x : inputs_for(net, 5, 3)) {
        const std::vector<double> ref = oracle::naive_forward(net, to_std(x));
        const Vector y = net.forward(x);
        REQUIRE(static_cast<std::size_t>(y.size()) == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
          CHECK(y[static_cast<Eigen::Index>(i)] == doctest::Approx(ref[i]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("no activation across the split") {
  Matrix w1(1, 1), w2(1, 1);
  w1 << -1.0;
  w2 << 1.0;
  const DnnNetwork net({w1, w2}, {}, 1);
  Vector x(1);
  x << 2.0;
  CHECK(net.forward(x)[0] == -2.0);
  CHECK_FALSE(net.activates_after(0));
  const DnnNetwork net3({w1, w2, w2}, {}, 2);
  CHECK(net3.forward(x)[0] == 0.0);
  CHECK(net3.activates_after(0));
  CHECK_FALSE(net3.activates_after(1));
  CHECK_FALSE(net3.activates_after(2));
}

TEST_CASE("retained counts round half up") {
  CHECK(retained_count(0.5, 3) == 2);
  CHECK(retained_count(0.25, 2) == 1);
  CHECK(retained_count(0.0, 10) == 0);
  CHECK(retained_count(1.0, 10) == 10);
  CHECK(retained_count(0.1, 4) == 0);
  CHECK_THROWS_AS(retained_count(1.5, 4), DomainError);
  CHECK_THROWS_AS(retained_count(-0.1, 4), DomainError);
}

TEST_CASE("magnitude pruning example with ties") {
  Matrix w(2, 2);
  w << 0.5, -0.1, 0.1, 2.0;
  const DnnNetwork net({w}, {}, 1);
  const DnnNetwork p = prune(net, 0.5, 1.0, {PruneKind::kMagnitude});
  const Matrix& q = p.layers()[0];
  CHECK(q(0, 0) == 0.5);
  CHECK(q(0, 1) == 0.0);
  CHECK(q(1, 0) == 0.0);
  CHECK(q(1, 1) == 2.0);
  Matrix t(1, 4);
  t << 0.3, -0.3, 0.3, 1.0;
  const DnnNetwork tn({t}, {}, 1);
  const Matrix tq = prune(tn, 0.75, 1.0, {PruneKind::kMagnitude}).layers()[0];
  CHECK(tq(0, 0) == 0.0);
  CHECK(tq(0, 1) == -0.3);
  CHECK(tq(0, 2) == 0.3);
}

TEST_CASE("pruning keeps the requested counts per side") {
  const std::vector<std::size_t> sizes{8, 10, 6, 4};
  const DnnNetwork net = DnnNetwork::random(sizes, {}, 2, 5);
  for (PruneKind kind : {PruneKind::kMagnitude, PruneKind::kRandom}) {
    for (double rho : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      const DnnNetwork p = prune(net, rho, 1.0 - rho, {kind, 9});
      std::size_t dev = 0, srv = 0;
      for (std::size_t l = 0; l < 3; ++l) {
        const auto nz = static_cast<std::size_t>((p.layers()[l].array() != 0.0).count());
        (l < 2 ? dev : srv) += nz;
        // surviving entries are untouched
        for (Eigen::Index k = 0; k < p.layers()[l].size(); ++k) {
          const double v = p.layers()[l].data()[k];
          if (v != 0.0) CHECK(v == net.layers()[l].data()[k]);
        }
      }
      CHECK(dev == retained_count(rho, net.device_param_count()));
      CHECK(srv == retained_count(1.0 - rho, net.server_param_count()));
    }
  }
}

TEST_CASE("magnitude pruning keeps the largest entries and is idempotent") {
  const std::vector<std::size_t> sizes{12, 12, 12};
  const DnnNetwork net = DnnNetwork::random(sizes, {}, 1, 21);
  const DnnNetwork p = prune(net, 0.4, 0.6, {PruneKind::kMagnitude});
  for (std::size_t l = 0; l < 2; ++l) {
    double kept_min = 1e300, dropped_max = 0.0;
    for (Eigen::Index k = 0; k < net.layers()[l].size(); ++k) {
      const double a = std::abs(net.layers()[l].data()[k]);
      if (p.layers()[l].data()[k] != 0.0) kept_min = std::min(kept_min, a);
      else dropped_max = std::max(dropped_max, a);
    }
    CHECK(kept_min >= dropped_max);
  }
  const DnnNetwork again = prune(p, 0.4, 0.6, {PruneKind::kMagnitude});
  for (std::size_t l = 0; l < 2; ++l) CHECK(again.layers()[l] == p.layers()[l]);
  const DnnNetwork full = prune(net, 1.0, 1.0, {PruneKind::kRandom, 3});
  for (std::size_t l = 0; l < 2; ++l) CHECK(full.layers()[l] == net.layers()[l]);
}

TEST_CASE("random pruning is reproducible per seed") {
  const std::vector<std::size_t> sizes{10, 10, 10};
  const DnnNetwork net = DnnNetwork::random(sizes, {}, 1, 2);
  const DnnNetwork a = prune(net, 0.5, 0.5, {PruneKind::kRandom, 42});
  const DnnNetwork b = prune(net, 0.5, 0.5, {PruneKind::kRandom, 42});
  const DnnNetwork c = prune(net, 0.5, 0.5, {PruneKind::kRandom, 43});
  CHECK(a.layers()[0] == b.layers()[0]);
  CHECK_FALSE(a.layers()[0] == c.layers()[0]);
}

TEST_CASE("parameter bound matches the loop oracle") {
  const std::vector<std::size_t> sizes{7, 11, 5, 9, 2};
  const DnnNetwork net = DnnNetwork::random(sizes, {}, 2, 77);
  const DnnNetwork p = prune(net, 0.3, 0.6, {PruneKind::kRandom, 1});
  const ParamBoundTerms t = param_distortion_bound(net, p);
  CHECK(t.bound == doctest::Approx(oracle::naive_param_bound(net, p)).epsilon(1e-12));
  double sq = 0.0;
  for (double d : t.diff_norms) sq += d * d;
  CHECK(t.total_diff_norm == doctest::Approx(std::sqrt(sq)).epsilon(1e-14));
  const ParamBoundTerms zero = param_distortion_bound(net, net);
  CHECK(zero.bound == 0.0);
}

TEST_CASE("two-layer output bound by hand") {
  Matrix w1(1, 1), w2(1, 1), h1(1, 1), h2(1, 1);
  w1 << 2.0;
  w2 << 3.0;
  h1 << 1.0;
  h2 << 3.0;
  const DnnNetwork net({w1, w2}, {Activation::kIdentity}, 1);
  const DnnNetwork pr({h1, h2}, {Activation::kIdentity}, 1);
  Vector x(1);
  x << 1.0;
  const BoundReport r = check_output_bound(net, pr, std::vector<Vector>{x});
  CHECK(r.param.bound == doctest::Approx(3.0));
  CHECK(r.max_output_distortion == doctest::Approx(3.0));
  CHECK(r.holds);
  CHECK(r.gap_factor == doctest::Approx(1.0));
}

TEST_CASE("layer inequalities and the output bound hold across activations") {
  const std::vector<std::size_t> sizes{8, 16, 16, 8, 4};
  const std::vector<double> grid{0.1, 0.5, 0.9};
  const std::vector<PruneStrategy> strats{{PruneKind::kMagnitude}, {PruneKind::kRandom, 4}};
  for (Activation act : {Activation::kRelu, Activation::kTanh, Activation::kLeakyRelu}) {
    const DnnNetwork net = DnnNetwork::random(sizes, {act, 0.05}, 2, 123);
    const auto xs = inputs_for(net, 32, 9);
    for (const BoundReport& r : verify_output_bound(net, xs, grid, strats)) {
      CHECK(r.holds);
      CHECK(r.gap_factor >= 1.0);
      const DnnNetwork p = prune(net, r.rho, r.rho, {r.strategy, 4});
      for (const LayerCheck& c : verify_layer_bounds(net, p, xs)) {
        CHECK(c.norm_pass);
        CHECK(c.distortion_pass);
      }
    }
  }
}

TEST_CASE("unit ball samples stay inside the ball") {
  const auto xs = sample_unit_ball(5, 2000, 17);
  double mean_norm = 0.0;
  for (const Vector& x : xs) {
    CHECK(x.norm() <= 1.0 + 1e-15);
    mean_norm += x.norm();
  }
  // E||x|| = d / (d + 1) for the uniform ball.
  CHECK(mean_norm / 2000.0 == doctest::Approx(5.0 / 6.0).epsilon(0.02));
}

TEST_CASE("first-order estimate on a linear network is exact") {
  const std::vector<std::size_t> sizes{4, 3};
  const DnnNetwork net = DnnNetwork::random(sizes, {Activation::kIdentity}, 1, 8);
  const DnnNetwork p = prune(net, 0.5, 0.5, {PruneKind::kMagnitude});
  const auto xs = inputs_for(net, 6, 2);
  const GradientReport g = gradient_distortion_estimate(net, p, xs, 1e-4);
  REQUIRE(g.gradient_bound.has_value());
  CHECK(g.bound_ok);
  CHECK(g.max_relative_gap < 1e-6);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // single linear layer: J has Frobenius norm ||x||
    CHECK(g.jvp_norm[i] <= xs[i].norm() * g.delta_norm * (1.0 + 1e-6));
  }
}

TEST_CASE("first-order estimate tracks small perturbations") {
  const std::vector<std::size_t> sizes{5, 6, 3};
  const DnnNetwork net = DnnNetwork::random(sizes, {Activation::kTanh}, 1, 31);
  DnnNetwork tiny = net;
  for (Matrix& w : tiny.mutable_layers()) w *= 1.0 + 1e-5;
  const GradientReport g = gradient_distortion_estimate(net, tiny, inputs_for(net, 4, 6), 1e-3);
  CHECK(g.bound_ok);
  CHECK(g.max_relative_gap < 1e-3);
  CHECK_THROWS_AS(gradient_distortion_estimate(net, tiny, inputs_for(net, 1, 6), 0.0),
                  DomainError);
}
