#include "coinfer/sca_solver.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "coinfer/error.hpp"

namespace coinfer {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLn2 = 0.69314718055994530942;

double snr_per_watt(const ChannelParams& chan) {
  return path_gain(chan) / (chan.bandwidth * chan.noise_psd);
}

// Values a subproblem holds fixed, either by restriction or because a side has
// no work to do.
struct Pins {
  std::optional<double> rho, f_device, p_tx, rho_server, f_server;
};

Pins resolve_pins(const Scenario& sc, const Restriction& fixed) {
  const ModelProfile& m = sc.model;
  Pins pin{fixed.rho, fixed.f_device, fixed.p_tx, fixed.rho_server, fixed.f_server};
  auto side = [&](std::optional<double>& rho, std::optional<double>& f, double params,
                  double flops) {
    if (flops == 0.0) {
      // Pruning is free here; keeping everything minimizes the objective.
      if (!rho) rho = 1.0;
      f = 0.0;
    } else if (params == 0.0 && !rho) {
      rho = sc.rho_min;
    }
  };
  side(pin.rho, pin.f_device, m.q_device_params, m.n_flop_device);
  side(pin.rho_server, pin.f_server, m.s_server_params, m.n_flop_server);
  if (m.theta_embedding_bits == 0.0) pin.p_tx = 0.0;
  return pin;
}

Decision apply_pins(Decision d, const Pins& pin) {
  if (pin.rho) d.rho = *pin.rho;
  if (pin.f_device) d.f_device = *pin.f_device;
  if (pin.p_tx) d.p_tx = *pin.p_tx;
  if (pin.rho_server) d.rho_server = *pin.rho_server;
  if (pin.f_server) d.f_server = *pin.f_server;
  return d;
}

double relative_change(double prev, double next) {
  return (prev - next) / std::max(std::abs(prev), std::numeric_limits<double>::min());
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

std::string to_string(BenchmarkScheme s) {
  switch (s) {
    case BenchmarkScheme::kJoint: return "joint";
    case BenchmarkScheme::kFixedPower: return "fixed_power";
    case BenchmarkScheme::kFixedFrequency: return "fixed_frequency";
    case BenchmarkScheme::kPruneDeviceOnly: return "prune_device_only";
    case BenchmarkScheme::kPruneServerOnly: return "prune_server_only";
    case BenchmarkScheme::kOnDeviceOnly: return "on_device_only";
    case BenchmarkScheme::kOnServerOnly: return "on_server_only";
  }
  return "unknown";
}

const std::vector<BenchmarkScheme>& all_schemes() {
  static const std::vector<BenchmarkScheme> kAll{
      BenchmarkScheme::kJoint,           BenchmarkScheme::kFixedPower,
      BenchmarkScheme::kFixedFrequency,  BenchmarkScheme::kPruneDeviceOnly,
      BenchmarkScheme::kPruneServerOnly, BenchmarkScheme::kOnDeviceOnly,
      BenchmarkScheme::kOnServerOnly};
  return kAll;
}

BenchmarkScheme parse_scheme(const std::string& name) {
  for (BenchmarkScheme s : all_schemes()) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("schemes", "unknown scheme '" + name + "'");
}

bool is_restriction(BenchmarkScheme s) {
  return s == BenchmarkScheme::kFixedPower || s == BenchmarkScheme::kFixedFrequency ||
         s == BenchmarkScheme::kPruneDeviceOnly || s == BenchmarkScheme::kPruneServerOnly;
}

Restriction restriction_for(BenchmarkScheme s, const Scenario& sc) {
  Restriction r;
  switch (s) {
    case BenchmarkScheme::kFixedPower:
      if (sc.model.theta_embedding_bits > 0.0) r.p_tx = sc.channel.p_max;
      break;
    case BenchmarkScheme::kFixedFrequency:
      if (sc.model.n_flop_device > 0.0) r.f_device = sc.device.f_max;
      if (sc.model.n_flop_server > 0.0) r.f_server = sc.server.f_max;
      break;
    case BenchmarkScheme::kPruneDeviceOnly: r.rho_server = 1.0; break;
    case BenchmarkScheme::kPruneServerOnly: r.rho = 1.0; break;
    default: break;
  }
  return r;
}

Scenario scheme_scenario(BenchmarkScheme s, const Scenario& sc) {
  Scenario out = sc;
  ModelProfile& m = out.model;
  if (s == BenchmarkScheme::kOnDeviceOnly) {
    m.q_device_params += m.s_server_params;
    m.n_flop_device += m.n_flop_server;
    m.s_server_params = 0.0;
    m.n_flop_server = 0.0;
    m.theta_embedding_bits = 0.0;
  } else if (s == BenchmarkScheme::kOnServerOnly) {
    if (!m.raw_input_bits) {
      throw ConfigError("raw_input_bits", "required by the on_server_only scheme");
    }
    m.s_server_params += m.q_device_params;
    m.n_flop_server += m.n_flop_device;
    m.q_device_params = 0.0;
    m.n_flop_device = 0.0;
    m.theta_embedding_bits = *m.raw_input_bits;
  }
  return out;
}

double upload_energy_slope(double p_k, const Scenario& sc) {
  const double theta = sc.model.theta_embedding_bits;
  const double k = snr_per_watt(sc.channel);
  const double bw = sc.channel.bandwidth;
  const double l = std::log2(1.0 + k * p_k);
  return theta / (bw * l) - p_k * theta * k / (bw * l * l * (1.0 + k * p_k) * kLn2);
}

ZetaValue zeta_linearization(double p, const LocalPoint& lp, const Scenario& sc) {
  if (!(lp.p_k > 0.0)) throw DomainError("zeta_linearization: p_k must be positive");
  const double theta = sc.model.theta_embedding_bits;
  ZetaValue z;
  z.slope = upload_energy_slope(lp.p_k, sc);
  z.value = upload_energy(lp.p_k, theta, sc.channel) + z.slope * (p - lp.p_k);
  return z;
}

bool linearization_dominates(double p_k, const Scenario& sc, int samples) {
  const double theta = sc.model.theta_embedding_bits;
  if (theta == 0.0) return true;
  const LocalPoint lp{p_k, 1.0, 1.0};
  const double p_max = sc.channel.p_max;
  const double lo = 0.01 * p_max;
  for (int i = 0; i < samples; ++i) {
    const double p = samples == 1 ? p_max : lo + (p_max - lo) * i / (samples - 1);
    const double exact = upload_energy(p, theta, sc.channel);
    const double z = zeta_linearization(p, lp, sc).value;
    if (z < exact - 1e-12 * exact) return false;
  }
  return true;
}

VectorXd to_scaled(const Decision& d, double rho_aux, double rho_server_aux, const Scenario& sc) {
  VectorXd x(var::kCount);
  x[var::kRho] = d.rho;
  x[var::kFDevice] = d.f_device / sc.device.f_max;
  x[var::kPower] = d.p_tx / sc.channel.p_max;
  x[var::kRhoServer] = d.rho_server;
  x[var::kFServer] = d.f_server / sc.server.f_max;
  x[var::kRhoAux] = rho_aux;
  x[var::kRhoServerAux] = rho_server_aux;
  return x;
}

Decision from_scaled(const VectorXd& x, const Scenario& sc) {
  Decision d;
  d.rho = x[var::kRho];
  d.f_device = x[var::kFDevice] * sc.device.f_max;
  d.p_tx = x[var::kPower] * sc.channel.p_max;
  d.rho_server = x[var::kRhoServer];
  d.f_server = x[var::kFServer] * sc.server.f_max;
  return d;
}

Subproblem build_subproblem(const LocalPoint& lp, const Scenario& sc, const Restriction& fixed,
                            const ScaOptions& opts) {
  const ModelProfile& m = sc.model;
  const Pins pin = resolve_pins(sc, fixed);

  Subproblem sub;
  sub.lp = lp;
  sub.scenario = sc;
  sub.objective_note = "minimize -(rho q + rho_server s)/(q + s); D-hat is decreasing in it";
  convex::ConvexProgram& prog = sub.program;
  const double total = m.total_params();
  prog.cost = VectorXd::Zero(var::kCount);
  prog.cost[var::kRho] = -m.q_device_params / total;
  prog.cost[var::kRhoServer] = -m.s_server_params / total;

  prog.lower.resize(var::kCount);
  prog.upper.resize(var::kCount);
  auto box = [&](Eigen::Index i, double lo, double hi, const std::optional<double>& p) {
    prog.lower[i] = p ? *p : lo;
    prog.upper[i] = p ? *p : hi;
  };
  const double aux_hi = 2.0 / sc.rho_min;
  box(var::kRho, sc.rho_min, 1.0, pin.rho);
  box(var::kFDevice, opts.f_floor, 1.0,
      pin.f_device ? std::optional<double>(*pin.f_device / sc.device.f_max) : std::nullopt);
  box(var::kPower, opts.p_floor, 1.0,
      pin.p_tx ? std::optional<double>(*pin.p_tx / sc.channel.p_max) : std::nullopt);
  box(var::kRhoServer, sc.rho_min, 1.0, pin.rho_server);
  box(var::kFServer, opts.f_floor, 1.0,
      pin.f_server ? std::optional<double>(*pin.f_server / sc.server.f_max) : std::nullopt);
  box(var::kRhoAux, 0.5, aux_hi,
      pin.rho ? std::optional<double>(1.0 / *pin.rho) : std::nullopt);
  box(var::kRhoServerAux, 0.5, aux_hi,
      pin.rho_server ? std::optional<double>(1.0 / *pin.rho_server) : std::nullopt);
  sub.device_pair_free = !pin.rho;
  sub.server_pair_free = !pin.rho_server;

  // Coefficients in scaled units: t = a / (rho' x_f), e = b x_f^2 / rho'.
  const double t_dev = m.n_flop_device / (sc.device.flops_per_cycle * sc.device.f_max);
  const double e_dev = sc.device.pue * m.n_flop_device * sc.device.power_coeff *
                       sc.device.f_max * sc.device.f_max / sc.device.flops_per_cycle;
  const double t_srv = m.n_flop_server / (sc.server.flops_per_cycle * sc.server.f_max);
  const double e_srv = sc.server.pue * m.n_flop_server * sc.server.power_coeff *
                       sc.server.f_max * sc.server.f_max / sc.server.flops_per_cycle;
  const double theta = m.theta_embedding_bits;
  const double bw = sc.channel.bandwidth;
  const double kp = snr_per_watt(sc.channel) * sc.channel.p_max;  // SNR per scaled power unit
  const double t0 = sc.qos.t_max;
  const double e0 = sc.qos.e_max;
  const bool device_on = m.n_flop_device > 0.0;
  const bool server_on = m.n_flop_server > 0.0;
  const bool upload_on = theta > 0.0;

  double zeta_0 = 0.0;      // ζ at p = 0 (intercept), J
  double zeta_slope = 0.0;  // per scaled power unit, J
  if (upload_on) {
    const ZetaValue z = zeta_linearization(0.0, lp, sc);
    zeta_0 = z.value;
    zeta_slope = z.slope * sc.channel.p_max;
  }

  // a / (x_u x_v)
  auto add_inverse_product = [](double a, Eigen::Index iu, Eigen::Index iv, const VectorXd& x,
                                VectorXd* g, MatrixXd* h) {
    const double u = x[iu];
    const double v = x[iv];
    if (!(u > 0.0 && v > 0.0)) return std::numeric_limits<double>::infinity();
    const double val = a / (u * v);
    if (g != nullptr) {
      (*g)[iu] += -val / u;
      (*g)[iv] += -val / v;
      (*h)(iu, iu) += 2.0 * val / (u * u);
      (*h)(iv, iv) += 2.0 * val / (v * v);
      (*h)(iu, iv) += val / (u * v);
      (*h)(iv, iu) += val / (u * v);
    }
    return val;
  };
  // b x_v^2 / x_u
  auto add_quad_over_lin = [](double b, Eigen::Index iu, Eigen::Index iv, const VectorXd& x,
                              VectorXd* g, MatrixXd* h) {
    const double u = x[iu];
    const double v = x[iv];
    if (!(u > 0.0)) return std::numeric_limits<double>::infinity();
    const double val = b * v * v / u;
    if (g != nullptr) {
      (*g)[iu] += -val / u;
      (*g)[iv] += 2.0 * b * v / u;
      (*h)(iu, iu) += 2.0 * val / (u * u);
      (*h)(iv, iv) += 2.0 * b / u;
      (*h)(iu, iv) += -2.0 * b * v / (u * u);
      (*h)(iv, iu) += -2.0 * b * v / (u * u);
    }
    return val;
  };

  prog.constraints.push_back(
      {"delay", [=](const VectorXd& x, VectorXd* g, MatrixXd* h) {
         double total_t = 0.0;
         if (device_on) total_t += add_inverse_product(t_dev, var::kRhoAux, var::kFDevice, x, g, h);
         if (server_on) {
           total_t += add_inverse_product(t_srv, var::kRhoServerAux, var::kFServer, x, g, h);
         }
         if (upload_on) {
           const double y = x[var::kPower];
           const double one = 1.0 + kp * y;
           if (!(y > 0.0)) return std::numeric_limits<double>::infinity();
           const double l = std::log2(one);
           const double l1 = kp / (one * kLn2);
           const double l2 = -kp * kp / (one * one * kLn2);
           total_t += theta / (bw * l);
           if (g != nullptr) {
             (*g)[var::kPower] += -theta * l1 / (bw * l * l);
             (*h)(var::kPower, var::kPower) += theta * (2.0 * l1 * l1 - l * l2) / (bw * l * l * l);
           }
         }
         if (g != nullptr) {
           *g /= t0;
           *h /= t0;
         }
         return total_t / t0 - 1.0;
       }});

  prog.constraints.push_back(
      {"energy", [=](const VectorXd& x, VectorXd* g, MatrixXd* h) {
         double total_e = 0.0;
         if (device_on) total_e += add_quad_over_lin(e_dev, var::kRhoAux, var::kFDevice, x, g, h);
         if (server_on) {
           total_e += add_quad_over_lin(e_srv, var::kRhoServerAux, var::kFServer, x, g, h);
         }
         if (upload_on) {
           total_e += zeta_0 + zeta_slope * x[var::kPower];
           if (g != nullptr) (*g)[var::kPower] += zeta_slope;
         }
         if (g != nullptr) {
           *g /= e0;
           *h /= e0;
         }
         return total_e / e0 - 1.0;
       }});

  // rho - 1/rho'_k + (rho' - rho'_k)/rho'_k^2 <= 0
  auto tangent = [&](const char* name, Eigen::Index i_rho, Eigen::Index i_aux, double aux_k) {
    if (!(aux_k > 0.0)) throw DomainError("build_subproblem: auxiliary local point must be positive");
    const double inv = 1.0 / aux_k;
    const double inv2 = inv * inv;
    prog.constraints.push_back(
        {name, [=](const VectorXd& x, VectorXd* g, MatrixXd*) {
           if (g != nullptr) {
             (*g)[i_rho] = 1.0;
             (*g)[i_aux] = inv2;
           }
           return x[i_rho] - 2.0 * inv + x[i_aux] * inv2;
         }});
  };
  if (sub.device_pair_free) tangent("tangent_device", var::kRho, var::kRhoAux, lp.rho_aux_k);
  if (sub.server_pair_free) {
    tangent("tangent_server", var::kRhoServer, var::kRhoServerAux, lp.rho_server_aux_k);
  }
  return sub;
}

SubproblemSolution solve_subproblem(const Subproblem& sub, const VectorXd* start,
                                    const ScaOptions& opts) {
  const convex::ConvexProgram& prog = sub.program;
  const Scenario& sc = sub.scenario;
  SubproblemSolution out;

  VectorXd hint;
  if (start != nullptr) {
    hint = *start;
  } else {
    hint = VectorXd(var::kCount);
    hint << 1.0, 1.0, 1.0, 1.0, 1.0, sub.lp.rho_aux_k, sub.lp.rho_server_aux_k;
  }
  VectorXd x = convex::project_into_box(prog, hint, 0.0);
  double viol = convex::max_violation(prog, x);
  if (!(viol < 0.0) || !convex::strictly_inside_box(prog, x)) {
    const convex::PhaseOneResult p1 = convex::find_interior_point(prog, hint, opts.barrier);
    out.newton_iterations += p1.newton_iterations;
    x = p1.x;
    viol = p1.max_violation;
  }
  out.phase1_violation = viol;
  if (!(viol <= opts.feasibility_tol)) {
    out.feasible = false;
    out.x = x;
    out.decision = from_scaled(x, sc);
    return out;
  }
  out.feasible = true;
  if (viol < 0.0) {
    const convex::BarrierResult r = convex::minimize(prog, x, opts.barrier);
    out.newton_iterations += r.newton_iterations;
    out.duality_gap = r.duality_gap;
    x = r.x;
  } else {
    out.boundary_only = true;
  }
  out.x = x;
  out.decision = from_scaled(x, sc);
  // Largest auxiliaries the tangent constraints allow; raising them only
  // loosens the delay and energy constraints.
  const double aux_hi = prog.upper[var::kRhoAux];
  auto lift = [&](Eigen::Index i_rho, Eigen::Index i_aux, double aux_k, bool free_pair) {
    if (!free_pair) return x[i_aux];
    return std::min(aux_hi, std::max(x[i_aux], 2.0 * aux_k - x[i_rho] * aux_k * aux_k));
  };
  out.rho_aux = lift(var::kRho, var::kRhoAux, sub.lp.rho_aux_k, sub.device_pair_free);
  out.rho_server_aux =
      lift(var::kRhoServer, var::kRhoServerAux, sub.lp.rho_server_aux_k, sub.server_pair_free);
  const ModelProfile& m = sc.model;
  out.retained_bits =
      (out.decision.rho * m.q_device_params + out.decision.rho_server * m.s_server_params) *
      m.bits_per_param;
  return out;
}

std::optional<Decision> initial_point(const Scenario& sc, const Restriction& fixed,
                                      const ScaOptions& opts) {
  const Pins pin = resolve_pins(sc, fixed);
  Decision base{1.0, sc.device.f_max, sc.channel.p_max, 1.0, sc.server.f_max};
  base = apply_pins(base, pin);
  auto at = [&](double kappa) {
    Decision d = base;
    if (!pin.rho) d.rho = kappa;
    if (!pin.rho_server) d.rho_server = kappa;
    return d;
  };
  auto ok = [&](double kappa) { return is_feasible(at(kappa), sc).feasible; };
  if (ok(1.0)) return at(1.0);
  if (ok(sc.rho_min)) {
    double lo = sc.rho_min;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    return at(lo);
  }

  // Phase I on the convex model, re-linearizing the upload energy at the
  // power it proposes.
  LocalPoint lp{sc.channel.p_max, 1.0 / sc.rho_min, 1.0 / sc.rho_min};
  if (pin.p_tx && *pin.p_tx > 0.0) lp.p_k = *pin.p_tx;
  if (pin.rho) lp.rho_aux_k = 1.0 / *pin.rho;
  if (pin.rho_server) lp.rho_server_aux_k = 1.0 / *pin.rho_server;
  VectorXd hint = to_scaled(at(sc.rho_min), lp.rho_aux_k, lp.rho_server_aux_k, sc);
  for (int round = 0; round < 20; ++round) {
    const Subproblem sub = build_subproblem(lp, sc, fixed, opts);
    const convex::PhaseOneResult p1 = convex::find_interior_point(sub.program, hint, opts.barrier);
    if (!(p1.max_violation <= opts.feasibility_tol)) return std::nullopt;
    const Decision d = from_scaled(p1.x, sc);
    if (is_feasible(d, sc, opts.feasibility_tol).feasible) return d;
    if (sc.model.theta_embedding_bits > 0.0 && d.p_tx > 0.0) lp.p_k = d.p_tx;
    hint = p1.x;
  }
  return std::nullopt;
}

SolveTrace sca_optimize_from(const Scenario& sc, const Decision& start, const ScaOptions& opts,
                             const Restriction& fixed) {
  if (!(opts.epsilon > 0.0)) throw DomainError("sca_optimize: epsilon must be positive");
  validate(sc);
  SolveTrace tr;
  tr.epsilon = opts.epsilon;
  tr.scenario = sc;
  if (!is_feasible(start, sc, opts.feasibility_tol).feasible) {
    tr.status = SolveStatus::kInfeasible;
    tr.message = "start point violates the budgets";
    return tr;
  }

  const Pins pin = resolve_pins(sc, fixed);
  const bool upload_on = sc.model.theta_embedding_bits > 0.0;
  SolveIterate cur;
  cur.decision = start;
  cur.rho_aux = 1.0 / start.rho;
  cur.rho_server_aux = 1.0 / start.rho_server;
  cur.objective = evaluate(start, sc).distortion_bound;
  tr.iterates.push_back(cur);

  tr.status = SolveStatus::kMaxIter;
  for (int k = 0; k < opts.max_iter; ++k) {
    LocalPoint lp{cur.decision.p_tx, 1.0 / cur.decision.rho, 1.0 / cur.decision.rho_server};
    if (!upload_on) lp.p_k = sc.channel.p_max;
    if (upload_on && !linearization_dominates(lp.p_k, sc)) tr.linearization_ok = false;

    const Subproblem sub = build_subproblem(lp, sc, fixed, opts);
    const VectorXd seed = to_scaled(apply_pins(cur.decision, pin), lp.rho_aux_k,
                                    lp.rho_server_aux_k, sc);
    const SubproblemSolution sol = solve_subproblem(sub, &seed, opts);
    ++tr.iterations;
    if (!sol.feasible) {
      tr.status = SolveStatus::kConverged;
      tr.message = "subproblem lost its interior; keeping the previous iterate";
      break;
    }
    SolveIterate next;
    next.decision = sol.decision;
    next.rho_aux = sol.rho_aux;
    next.rho_server_aux = sol.rho_server_aux;
    next.objective = evaluate(sol.decision, sc).distortion_bound;
    next.newton_iterations = sol.newton_iterations;
    next.phase1_violation = sol.phase1_violation;

    if (!is_feasible(next.decision, sc, opts.feasibility_tol).feasible) {
      tr.status = SolveStatus::kConverged;
      tr.message = "subproblem optimum failed the budget re-check; keeping the previous iterate";
      tr.linearization_ok = false;
      break;
    }
    if (!(next.objective <= cur.objective)) {
      tr.status = SolveStatus::kConverged;
      tr.message = "no further decrease";
      break;
    }
    const double decrease = relative_change(cur.objective, next.objective);
    const double consistency =
        std::max(std::abs(next.decision.rho * next.rho_aux - 1.0),
                 std::abs(next.decision.rho_server * next.rho_server_aux - 1.0));
    tr.iterates.push_back(next);
    cur = next;
    if (decrease < opts.epsilon && consistency <= opts.consistency_tol) {
      tr.status = SolveStatus::kConverged;
      break;
    }
  }
  tr.decision = cur.decision;
  tr.metrics = evaluate(cur.decision, sc);
  if (tr.message.empty()) {
    tr.message = tr.status == SolveStatus::kConverged ? "objective decrease below epsilon"
                                                      : "iteration limit reached";
  }
  return tr;
}

SolveTrace sca_optimize(const Scenario& sc, const ScaOptions& opts, const Restriction& fixed) {
  if (!(opts.epsilon > 0.0)) throw DomainError("sca_optimize: epsilon must be positive");
  validate(sc);
  const std::optional<Decision> start = initial_point(sc, fixed, opts);
  if (!start) {
    SolveTrace tr;
    tr.epsilon = opts.epsilon;
    tr.scenario = sc;
    tr.status = SolveStatus::kInfeasible;
    tr.message = "no feasible starting point";
    return tr;
  }
  return sca_optimize_from(sc, *start, opts, fixed);
}

OracleResult grid_oracle(const Scenario& sc, int pts_per_axis, unsigned workers,
                         const Restriction& fixed) {
  if (pts_per_axis < 2) throw DomainError("grid_oracle: need at least 2 points per axis");
  validate(sc);
  const int n = pts_per_axis;
  auto axis = [&](const std::optional<double>& pin, double lo, double hi, bool open_low) {
    std::vector<double> v;
    if (pin) return std::vector<double>{*pin};
    for (int i = 0; i < n; ++i) {
      v.push_back(open_low ? hi * (i + 1) / n : lo + (hi - lo) * i / (n - 1));
    }
    v.back() = hi;
    return v;
  };
  const std::vector<double> rho = axis(fixed.rho, sc.rho_min, 1.0, false);
  const std::vector<double> f = axis(fixed.f_device, 0.0, sc.device.f_max, false);
  const std::vector<double> p = axis(fixed.p_tx, 0.0, sc.channel.p_max, true);
  const std::vector<double> rho_s = axis(fixed.rho_server, sc.rho_min, 1.0, false);
  const std::vector<double> f_s = axis(fixed.f_server, 0.0, sc.server.f_max, false);

  struct Best {
    double objective = kInf;
    std::size_t index = 0;
    Decision dec;
    bool found = false;
    std::size_t evaluated = 0;
  };
  const std::size_t inner = f.size() * p.size() * rho_s.size() * f_s.size();
  auto scan = [&](std::size_t i_rho, Best& best) {
    std::size_t idx = i_rho * inner;
    for (double fv : f) {
      for (double pv : p) {
        for (double rs : rho_s) {
          for (double fs : f_s) {
            const Decision d{rho[i_rho], fv, pv, rs, fs};
            ++best.evaluated;
            const Metrics met = evaluate(d, sc);
            if (met.t_total <= sc.qos.t_max && met.e_total <= sc.qos.e_max &&
                (met.distortion_bound < best.objective ||
                 (met.distortion_bound == best.objective && idx < best.index))) {
              best.objective = met.distortion_bound;
              best.index = idx;
              best.dec = d;
              best.found = true;
            }
            ++idx;
          }
        }
      }
    }
  };

  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rho.size())));
  std::vector<Best> partial(w);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < w; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < rho.size(); i += w) scan(i, partial[t]);
      });
    }
  }
  Best best;
  for (const Best& b : partial) {
    best.evaluated += b.evaluated;
    if (!b.found) continue;
    if (!best.found || b.objective < best.objective ||
        (b.objective == best.objective && b.index < best.index)) {
      const std::size_t ev = best.evaluated;
      best = b;
      best.evaluated = ev;
    }
  }
  OracleResult out;
  out.evaluated = best.evaluated;
  out.feasible = best.found && is_feasible(best.dec, sc).feasible;
  if (out.feasible) {
    out.decision = best.dec;
    out.objective = best.objective;
  }
  return out;
}

SolveTrace solve_benchmark(BenchmarkScheme kind, const Scenario& sc, const ScaOptions& opts) {
  const Scenario eff = scheme_scenario(kind, sc);
  SolveTrace tr = sca_optimize(eff, opts, restriction_for(kind, eff));
  if (kind == BenchmarkScheme::kJoint) {
    // Warm starts from the restricted designs: each is feasible for the joint
    // problem and SCA never increases the objective from its start.
    for (BenchmarkScheme r : all_schemes()) {
      if (!is_restriction(r)) continue;
      const SolveTrace sub = sca_optimize(eff, opts, restriction_for(r, eff));
      if (!sub.feasible()) continue;
      SolveTrace warm = sca_optimize_from(eff, sub.decision, opts);
      warm.iterations += sub.iterations;
      if (warm.feasible() &&
          (!tr.feasible() || warm.objective() < tr.objective())) {
        warm.iterations += tr.iterations;
        tr = std::move(warm);
      } else {
        tr.iterations += warm.iterations;
      }
    }
  }
  tr.scheme = kind;
  return tr;
}

}  // namespace coinfer
