#include "coinfer/system_model.hpp"

#include <cmath>

#include "coinfer/error.hpp"
#include "coinfer/rd_bounds.hpp"

namespace coinfer {
namespace {

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(field, "must be finite and > 0");
  }
}

void require_nonnegative(double v, const std::string& field) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError(field, "must be finite and >= 0");
  }
}

// Compute energy eta * (rho N / c) * phi * f^2.
double compute_energy(double rho, double n_flop, double f, const ComputeParams& cp) {
  return cp.pue * (rho * n_flop / cp.flops_per_cycle) * cp.power_coeff * f * f;
}

double compute_time(double rho, double n_flop, double f, const ComputeParams& cp) {
  const double work = rho * n_flop;
  if (work == 0.0) return 0.0;
  if (f <= 0.0) return kInf;
  return work / (f * cp.flops_per_cycle);
}

}  // namespace

void validate(const ChannelParams& chan) {
  require_positive(chan.k0_ref_gain, "channel.k0_ref_gain");
  require_positive(chan.d0_ref, "channel.d0_ref");
  require_positive(chan.pathloss_exp, "channel.pathloss_exp");
  require_positive(chan.distance, "channel.distance");
  require_positive(chan.bandwidth, "channel.bandwidth");
  require_positive(chan.noise_psd, "channel.noise_psd");
  require_positive(chan.p_max, "channel.p_max");
  if (chan.distance < chan.d0_ref) {
    throw ConfigError("channel.distance", "must be >= d0_ref");
  }
}

void validate(const ComputeParams& comp, const std::string& side) {
  require_positive(comp.f_max, side + ".f_max");
  require_positive(comp.flops_per_cycle, side + ".flops_per_cycle");
  require_positive(comp.pue, side + ".pue");
  require_positive(comp.power_coeff, side + ".power_coeff");
}

void validate(const ModelProfile& model) {
  require_nonnegative(model.q_device_params, "model.q_device_params");
  require_nonnegative(model.s_server_params, "model.s_server_params");
  require_nonnegative(model.bits_per_param, "model.bits_per_param");
  require_nonnegative(model.n_flop_device, "model.n_flop_device");
  require_nonnegative(model.n_flop_server, "model.n_flop_server");
  require_nonnegative(model.theta_embedding_bits, "model.theta_embedding_bits");
  if (!std::isfinite(model.entropy_bits)) {
    throw ConfigError("model.entropy_bits", "must be finite");
  }
  if (model.total_params() <= 0.0) {
    throw ConfigError("model.q_device_params", "q_device_params + s_server_params must be > 0");
  }
  if (model.raw_input_bits) require_nonnegative(*model.raw_input_bits, "model.raw_input_bits");
}

void validate(const QosBudget& qos) {
  require_positive(qos.t_max, "qos.t_max");
  require_positive(qos.e_max, "qos.e_max");
}

void validate(const Scenario& sc) {
  validate(sc.channel);
  validate(sc.device, "device");
  validate(sc.server, "server");
  validate(sc.model);
  validate(sc.qos);
  if (!(sc.rho_min > 0.0 && sc.rho_min <= 1.0)) {
    throw ConfigError("rho_min", "must lie in (0, 1]");
  }
}

double path_gain(const ChannelParams& chan) {
  return chan.k0_ref_gain * std::pow(chan.distance / chan.d0_ref, -chan.pathloss_exp);
}

double uplink_rate(double p, const ChannelParams& chan) {
  if (p <= 0.0) return 0.0;
  const double snr = path_gain(chan) * p / (chan.bandwidth * chan.noise_psd);
  return chan.bandwidth * std::log2(1.0 + snr);
}

double upload_time(double p, double theta_bits, const ChannelParams& chan) {
  if (theta_bits == 0.0) return 0.0;
  const double r = uplink_rate(p, chan);
  return r > 0.0 ? theta_bits / r : kInf;
}

double upload_energy(double p, double theta_bits, const ChannelParams& chan) {
  if (theta_bits == 0.0 || p <= 0.0) return 0.0;
  return p * theta_bits / uplink_rate(p, chan);
}

Metrics evaluate(const Decision& dec, const Scenario& sc) {
  const ModelProfile& m = sc.model;
  Metrics out;
  out.t_device = compute_time(dec.rho, m.n_flop_device, dec.f_device, sc.device);
  out.e_device = compute_energy(dec.rho, m.n_flop_device, dec.f_device, sc.device);
  out.rate_bps = uplink_rate(dec.p_tx, sc.channel);
  out.t_upload = upload_time(dec.p_tx, m.theta_embedding_bits, sc.channel);
  out.e_upload = upload_energy(dec.p_tx, m.theta_embedding_bits, sc.channel);
  out.t_server = compute_time(dec.rho_server, m.n_flop_server, dec.f_server, sc.server);
  out.e_server = compute_energy(dec.rho_server, m.n_flop_server, dec.f_server, sc.server);
  out.t_total = out.t_device + out.t_upload + out.t_server;
  out.e_total = out.e_device + out.e_upload + out.e_server;
  out.distortion_bound = distortion_lower_bound(dec.rho, dec.rho_server, m);
  return out;
}

FeasibilityReport is_feasible(const Decision& dec, const Scenario& sc, double rel_tol) {
  FeasibilityReport rep;
  auto check_box = [&](double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi)) rep.box_violations.emplace_back(name);
  };
  check_box(dec.rho, 0.0, 1.0, "rho");
  check_box(dec.rho_server, 0.0, 1.0, "rho_server");
  check_box(dec.p_tx, 0.0, sc.channel.p_max, "p_tx");
  check_box(dec.f_device, 0.0, sc.device.f_max, "f_device");
  check_box(dec.f_server, 0.0, sc.server.f_max, "f_server");
  rep.box_ok = rep.box_violations.empty();

  const Metrics met = evaluate(dec, sc);
  rep.delay_slack = sc.qos.t_max - met.t_total;
  rep.energy_slack = sc.qos.e_max - met.e_total;
  const bool delay_ok = met.t_total <= sc.qos.t_max * (1.0 + rel_tol);
  const bool energy_ok = met.e_total <= sc.qos.e_max * (1.0 + rel_tol);
  rep.feasible = rep.box_ok && delay_ok && energy_ok;
  return rep;
}

}  // namespace coinfer
