#include <cmath>
#include <random>

#include "coinfer/error.hpp"
#include "coinfer/system_model.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coinfer;

namespace {

Scenario base_scenario() {
  Scenario sc;
  sc.model.q_device_params = 1e6;
  sc.model.s_server_params = 2e6;
  sc.model.bits_per_param = 16;
  sc.model.n_flop_device = 1e9;
  sc.model.n_flop_server = 2e9;
  sc.model.theta_embedding_bits = 1e6;
  sc.model.entropy_bits = -3e6;
  sc.qos = {1.0, 1.0};
  return sc;
}

}  // namespace

TEST_CASE("path gain") {
  ChannelParams ch;
  ch.distance = 1.0;
  CHECK(path_gain(ch) == doctest::Approx(1e-3).epsilon(1e-15));
  ch.distance = 500.0;
  CHECK(path_gain(ch) == doctest::Approx(2.773e-11).epsilon(1e-3));
  CHECK(path_gain(ch) == doctest::Approx(1e-3 * std::pow(500.0, -2.8)).epsilon(1e-14));
  ch.pathloss_exp = 0.0;
  CHECK(path_gain(ch) == doctest::Approx(1e-3).epsilon(1e-15));
}

TEST_CASE("uplink rate") {
  ChannelParams ch;
  CHECK(uplink_rate(0.0, ch) == 0.0);
  CHECK(uplink_rate(0.5, ch) == doctest::Approx(1.947e7).epsilon(1e-3));
  // SNR of exactly one gives B bit/s.
  const double p_unit = ch.bandwidth * ch.noise_psd / path_gain(ch);
  CHECK(uplink_rate(p_unit, ch) == doctest::Approx(ch.bandwidth).epsilon(1e-14));
}

TEST_CASE("rate is nondecreasing and midpoint concave on a 1000-point grid") {
  ChannelParams ch;
  const int n = 1000;
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = uplink_rate(ch.p_max * i / (n - 1), ch);
  for (int i = 1; i < n; ++i) CHECK(r[i] >= r[i - 1]);
  for (int i = 1; i + 1 < n; ++i) CHECK(r[i] >= 0.5 * (r[i - 1] + r[i + 1]) * (1.0 - 1e-14));
}

TEST_CASE("evaluate matches hand-computed stage values") {
  Scenario sc = base_scenario();
  sc.model.theta_embedding_bits = 1e6;
  const Decision d{0.5, 1e9, 0.5, 1.0, 4e9};
  const Metrics m = evaluate(d, sc);
  CHECK(m.t_device == doctest::Approx(0.015625).epsilon(1e-14));
  CHECK(m.e_device == doctest::Approx(7.8125e-4).epsilon(1e-14));
  CHECK(m.t_upload == doctest::Approx(0.05136).epsilon(1e-3));
  CHECK(m.e_upload == doctest::Approx(0.02568).epsilon(1e-3));
  CHECK(m.t_server == doctest::Approx(2e9 / (4e9 * 128)).epsilon(1e-14));
  CHECK(m.e_server == doctest::Approx(2.0 * 2e9 / 128 * 1e-28 * 16e18).epsilon(1e-14));
  CHECK(m.t_total == m.t_device + m.t_upload + m.t_server);
  CHECK(m.e_total == m.e_device + m.e_upload + m.e_server);
  CHECK(m.t_total == doctest::Approx(oracle::total_delay(d, sc)).epsilon(1e-13));
  CHECK(m.e_total == doctest::Approx(oracle::total_energy(d, sc)).epsilon(1e-13));
}

TEST_CASE("degenerate stage values") {
  Scenario sc = base_scenario();
  Metrics m = evaluate({0.0, 1e9, 0.0, 0.5, 1e9}, sc);
  CHECK(m.t_device == 0.0);
  CHECK(std::isinf(m.t_upload));
  CHECK(m.e_upload == 0.0);
  sc.model.theta_embedding_bits = 0.0;
  m = evaluate({1.0, 1e9, 0.0, 0.5, 1e9}, sc);
  CHECK(m.t_upload == 0.0);
  CHECK(m.e_upload == 0.0);
}

TEST_CASE("monotonicity of stage terms under random sampling") {
  const Scenario sc = base_scenario();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 500; ++i) {
    const Decision d{u(rng), u(rng) * 1e9, u(rng) * 0.5, u(rng), u(rng) * 4e9};
    const Metrics m = evaluate(d, sc);
    Decision up = d;
    up.rho *= 1.05;
    CHECK(evaluate(up, sc).t_device > m.t_device);
    CHECK(evaluate(up, sc).e_device > m.e_device);
    up = d;
    up.f_device *= 1.05;
    CHECK(evaluate(up, sc).t_device < m.t_device);
    CHECK(evaluate(up, sc).e_device > m.e_device);
    up = d;
    up.p_tx *= 1.05;
    CHECK(evaluate(up, sc).t_upload <= m.t_upload);
  }
}

TEST_CASE("doubling the workload doubles device time and energy") {
  Scenario sc = base_scenario();
  const Decision d{0.7, 6e8, 0.3, 0.4, 2e9};
  const Metrics a = evaluate(d, sc);
  sc.model.n_flop_device *= 2.0;
  const Metrics b = evaluate(d, sc);
  CHECK(b.t_device == doctest::Approx(2.0 * a.t_device).epsilon(1e-15));
  CHECK(b.e_device == doctest::Approx(2.0 * a.e_device).epsilon(1e-15));
}

TEST_CASE("feasibility report") {
  Scenario sc = base_scenario();
  sc.qos = {1e9, 1e9};
  const Decision d{0.3, 5e8, 0.2, 0.6, 1e9};
  FeasibilityReport r = is_feasible(d, sc);
  CHECK(r.feasible);
  CHECK(r.delay_slack > 0.0);
  CHECK(r.energy_slack > 0.0);

  // Upload alone exceeds the budget.
  sc.qos.t_max = 0.5 * upload_time(sc.channel.p_max, sc.model.theta_embedding_bits, sc.channel);
  r = is_feasible({sc.rho_min, 1e9, sc.channel.p_max, sc.rho_min, 4e9}, sc);
  CHECK_FALSE(r.feasible);
  CHECK(r.delay_slack < 0.0);

  r = is_feasible({1.2, 1e9, 0.5, 1.0, 1e9}, base_scenario());
  CHECK_FALSE(r.box_ok);
  REQUIRE(r.box_violations.size() == 1);
  CHECK(r.box_violations[0] == "rho");
}

TEST_CASE("validation names the offending field") {
  Scenario sc = base_scenario();
  sc.channel.bandwidth = -1.0;
  try {
    validate(sc);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field().find("bandwidth") != std::string::npos);
  }
  sc = base_scenario();
  sc.channel.distance = 0.5;
  CHECK_THROWS_AS(validate(sc), ConfigError);
  sc = base_scenario();
  sc.rho_min = 0.0;
  CHECK_THROWS_AS(validate(sc), ConfigError);
  sc = base_scenario();
  sc.model.q_device_params = 0.0;
  sc.model.s_server_params = 0.0;
  CHECK_THROWS_AS(validate(sc), ConfigError);
  sc = base_scenario();
  sc.server.power_coeff = 0.0;
  CHECK_THROWS_AS(validate(sc), ConfigError);
  CHECK_NOTHROW(validate(base_scenario()));
}
