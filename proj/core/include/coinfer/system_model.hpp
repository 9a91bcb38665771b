#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace coinfer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic path-loss uplink channel.
struct ChannelParams {
  double k0_ref_gain = 1e-3;   // linear gain at the reference distance
  double d0_ref = 1.0;         // m
  double pathloss_exp = 2.8;
  double distance = 500.0;     // m
  double bandwidth = 5e6;      // Hz
  double noise_psd = 2e-19;    // W/Hz
  double p_max = 0.5;          // W
};

// Processor model for one side of the split (device or server).
struct ComputeParams {
  double f_max = 1e9;             // cycles/s
  double flops_per_cycle = 32.0;
  double pue = 1.0;
  double power_coeff = 5e-29;     // W/(cycle/s)^3
};

struct ModelProfile {
  double q_device_params = 0.0;
  double s_server_params = 0.0;
  double bits_per_param = 16.0;
  double n_flop_device = 0.0;
  double n_flop_server = 0.0;
  double theta_embedding_bits = 0.0;
  // Differential entropy of the full parameter vector, in bits.
  double entropy_bits = 0.0;
  // Size of a raw input sample; only needed by the on-server-only scheme.
  std::optional<double> raw_input_bits;

  double total_params() const { return q_device_params + s_server_params; }
};

struct QosBudget {
  double t_max = 1.0;  // s
  double e_max = 1.0;  // J
};

inline constexpr double kDefaultRhoMin = 1e-3;

struct Scenario {
  ChannelParams channel;
  ComputeParams device;
  ComputeParams server{4e9, 128.0, 2.0, 1e-28};
  ModelProfile model;
  QosBudget qos;
  double rho_min = kDefaultRhoMin;
};

// The five decision variables of the joint design.
struct Decision {
  double rho = 1.0;
  double f_device = 0.0;
  double p_tx = 0.0;
  double rho_server = 1.0;
  double f_server = 0.0;
};

struct Metrics {
  double t_device = 0.0;
  double t_upload = 0.0;
  double t_server = 0.0;
  double t_total = 0.0;
  double e_device = 0.0;
  double e_upload = 0.0;
  double e_server = 0.0;
  double e_total = 0.0;
  double rate_bps = 0.0;
  double distortion_bound = 0.0;
};

struct FeasibilityReport {
  bool feasible = false;
  bool box_ok = false;
  double delay_slack = 0.0;   // T0 - t_total (s); negative when violated
  double energy_slack = 0.0;  // E0 - e_total (J)
  std::vector<std::string> box_violations;
};

// Throws ConfigError naming the first invalid field.
void validate(const ChannelParams& chan);
void validate(const ComputeParams& comp, const std::string& side);
void validate(const ModelProfile& model);
void validate(const QosBudget& qos);
void validate(const Scenario& sc);

double path_gain(const ChannelParams& chan);

// Shannon rate B log2(1 + g p / (B N0)) in bit/s.
double uplink_rate(double p, const ChannelParams& chan);

// Upload energy p*theta/r(p); zero when nothing is sent (p == 0 or theta == 0).
double upload_energy(double p, double theta_bits, const ChannelParams& chan);
double upload_time(double p, double theta_bits, const ChannelParams& chan);

Metrics evaluate(const Decision& dec, const Scenario& sc);

// `rel_tol` loosens the budget checks by rel_tol * budget.
FeasibilityReport is_feasible(const Decision& dec, const Scenario& sc, double rel_tol = 0.0);

}  // namespace coinfer
