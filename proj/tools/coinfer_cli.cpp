// coinfer: command-line front end for the split-inference planner.
//
//   coinfer optimize <config> [--scheme NAME]... [--out run.csv] [--grid-oracle PTS]
//   coinfer sweep <config> [--out sweep.csv] [--workers N] [--grid-oracle PTS] [--timing]
//   coinfer verify-bounds <net-spec> [--seed S] [--gradient]
//   coinfer fit <weights-file> [--workers N]
//   coinfer rd <config> [--points N] [--out curve.csv]
//
// Exit codes: 0 success, 1 check failed, 2 infeasible, 3 config error, 4 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coinfer/dnn_verify.hpp"
#include "coinfer/error.hpp"
#include "coinfer/harness.hpp"
#include "coinfer/rd_bounds.hpp"
#include "coinfer/sca_solver.hpp"
#include "coinfer/weight_stats.hpp"

namespace {

using namespace coinfer;

constexpr int kExitCheckFailed = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

const char* const kObjectiveNote =
    "# objective: D-hat, the rate-distortion lower bound on pruning distortion.\n"
    "# It stands in for downstream task scores (ROUGE/F1), which need full-scale pruned models.\n";

void write_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + *path);
  out << text;
}

void print_decision(const SolveTrace& tr) {
  const Decision& d = tr.decision;
  const Metrics& m = tr.metrics;
  std::printf("%-18s %-10s iters=%d\n", to_string(tr.scheme).c_str(), to_string(tr.status).c_str(),
              tr.iterations);
  if (!tr.feasible()) {
    std::printf("  %s\n", tr.message.c_str());
    return;
  }
  std::printf("  D-hat        %s\n", format_double(m.distortion_bound).c_str());
  std::printf("  rho          %s   rho_server %s\n", format_double(d.rho).c_str(),
              format_double(d.rho_server).c_str());
  std::printf("  f_device     %s Hz   f_server %s Hz\n", format_double(d.f_device).c_str(),
              format_double(d.f_server).c_str());
  std::printf("  p_tx         %s W   rate %s bit/s\n", format_double(d.p_tx).c_str(),
              format_double(m.rate_bps).c_str());
  std::printf("  delay        %s s (device %s, upload %s, server %s)\n",
              format_double(m.t_total).c_str(), format_double(m.t_device).c_str(),
              format_double(m.t_upload).c_str(), format_double(m.t_server).c_str());
  std::printf("  energy       %s J (device %s, upload %s, server %s)\n",
              format_double(m.e_total).c_str(), format_double(m.e_device).c_str(),
              format_double(m.e_upload).c_str(), format_double(m.e_server).c_str());
  if (!tr.linearization_ok) {
    std::printf("  warning: upload-energy linearization was not an upper bound everywhere\n");
  }
}

int cmd_optimize(const std::string& config, const std::vector<std::string>& scheme_names,
                 const std::optional<std::string>& out, int oracle_pts) {
  const RunConfig cfg = load_config(config);
  std::vector<BenchmarkScheme> schemes;
  for (const std::string& n : scheme_names) schemes.push_back(parse_scheme(n));
  if (schemes.empty()) schemes.push_back(BenchmarkScheme::kJoint);

  std::printf("%s", kObjectiveNote);
  std::vector<SweepRow> rows;
  for (BenchmarkScheme s : schemes) {
    const SolveTrace tr = solve_benchmark(s, cfg.scenario, cfg.solver);
    print_decision(tr);
    SweepRow row;
    row.axis = SweepAxis::kNone;
    row.scheme = s;
    row.status = tr.status;
    row.iterations = tr.iterations;
    row.decision = tr.decision;
    row.metrics = tr.metrics;
    if (oracle_pts > 0) {
      const Scenario eff = scheme_scenario(s, cfg.scenario);
      const OracleResult o = grid_oracle(eff, oracle_pts, 1, restriction_for(s, eff));
      std::printf("  grid oracle  %s (%zu points)\n",
                  o.feasible ? format_double(o.objective).c_str() : "infeasible", o.evaluated);
      if (o.feasible) row.oracle_dhat = o.objective;
    }
    rows.push_back(row);
  }
  if (out) emit_csv(rows, *out);
  return rows.front().feasible() ? 0 : kExitInfeasible;
}

int cmd_sweep(const std::string& config, const std::optional<std::string>& out, unsigned workers,
              int oracle_pts, bool timing) {
  const RunConfig cfg = load_config(config);
  if (!cfg.sweep) throw ConfigError("sweep", "missing sweep section");
  std::cerr << kObjectiveNote;
  SweepOptions opts;
  opts.workers = workers;
  opts.grid_oracle_pts = oracle_pts;
  opts.record_wall_time = timing;
  const std::vector<SweepRow> rows = run_sweep(cfg, opts);
  if (out) {
    emit_csv(rows, *out);
  } else {
    if (rows.empty()) throw Error("sweep produced no rows");
    std::cout << format_csv(rows);
  }
  std::size_t failed = 0;
  for (const SweepRow& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "cell " << to_string(r.axis) << "=" << format_double(r.axis_value) << " "
                << to_string(r.scheme) << ": " << r.error << "\n";
    }
  }
  return failed == 0 ? 0 : kExitNumeric;
}

int cmd_verify(const std::string& spec_path, std::optional<std::uint64_t> seed, bool gradient) {
  NetworkSpec spec = load_network_spec(spec_path);
  if (seed) {
    spec.weight_seed = *seed;
    spec.input_seed = *seed + 1;
  }
  const DnnNetwork net = build_network(spec);
  const std::vector<Vector> inputs =
      sample_unit_ball(net.input_dim(), spec.inputs, spec.input_seed);
  std::vector<PruneStrategy> strategies;
  for (std::size_t i = 0; i < spec.strategies.size(); ++i) {
    strategies.push_back({spec.strategies[i], spec.input_seed + 17 * (i + 1), false});
  }
  std::printf("network: %zu layers, split %zu, %zu parameters, %zu inputs\n", net.layer_count(),
              net.split_index(), net.param_count(), inputs.size());
  std::printf("%-10s %-6s %-14s %-14s %-10s %-8s %s\n", "strategy", "rho", "max_out_dist",
              "bound", "gap", "output", "layers");
  bool all_ok = true;
  for (const PruneStrategy& st : strategies) {
    for (double rho : spec.rho_grid) {
      const DnnNetwork pruned = prune(net, rho, rho, st);
      const BoundReport rep = check_output_bound(net, pruned, inputs);
      bool layers_ok = true;
      for (const LayerCheck& c : verify_layer_bounds(net, pruned, inputs)) {
        layers_ok = layers_ok && c.norm_pass && c.distortion_pass;
      }
      all_ok = all_ok && rep.holds && layers_ok;
      std::printf("%-10s %-6s %-14s %-14s %-10.4g %-8s %s\n", to_string(st.kind).c_str(),
                  format_double(rho).c_str(), format_double(rep.max_output_distortion).c_str(),
                  format_double(rep.param.bound).c_str(), rep.gap_factor,
                  rep.holds ? "ok" : "VIOLATED", layers_ok ? "ok" : "VIOLATED");
      if (gradient) {
        const GradientReport g = gradient_distortion_estimate(net, pruned, inputs, 1e-4);
        std::printf("    first-order estimate: max relative gap %.4g, G bound %s\n",
                    g.max_relative_gap,
                    g.gradient_bound ? (g.bound_ok ? "ok" : "VIOLATED") : "skipped (net too large)");
      }
    }
  }
  return all_ok ? 0 : kExitCheckFailed;
}

int cmd_fit(const std::string& path, unsigned workers) {
  const WeightSample sample = load_weight_sample(path);
  auto show = [](const std::string& name, const FitReport& r) {
    std::printf("%-20s n=%zu laplace(mean=%s, lambda=%s) gauss(mean=%s, std=%s) "
                "loglik L=%s G=%s -> %s, entropy %s bits/param\n",
                name.c_str(), r.count, format_double(r.laplace_mean).c_str(),
                format_double(r.laplace_scale).c_str(), format_double(r.gauss_mean).c_str(),
                format_double(r.gauss_std).c_str(), format_double(r.loglik_laplace).c_str(),
                format_double(r.loglik_gauss).c_str(),
                r.preferred() == Family::kLaplace ? "laplace" : "gauss",
                format_double(r.entropy_bits_per_param).c_str());
  };
  show("all", compare_fits(sample));
  if (sample.labels) {
    for (const auto& [label, rep] : fit_by_group(sample, workers)) show(label, rep);
  }
  return 0;
}

int cmd_rd(const std::string& config, int points, const std::optional<std::string>& out) {
  const RunConfig cfg = load_config(config);
  const ModelProfile& m = cfg.scenario.model;
  const RdModel whole{m.total_params(), m.entropy_bits, std::nullopt};
  std::ostringstream os;
  os << "rho,retained_bits,dhat,log2_dhat,rate_lower_bound_at_dhat\n";
  for (int i = 0; i < points; ++i) {
    const double rho = points == 1 ? 1.0
                                   : cfg.scenario.rho_min +
                                         (1.0 - cfg.scenario.rho_min) * i / (points - 1);
    const double bits = rho * m.total_params() * m.bits_per_param;
    const double d = distortion_lower_bound(rho, rho, m);
    const RateBound r = rate_lower_bound(d, whole);
    os << format_double(rho) << "," << format_double(bits) << "," << format_double(d) << ","
       << format_double(log2_distortion_lower_bound(rho, rho, m)) << ","
       << format_double(r.value) << "\n";
  }
  write_text(out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pruning-aware split-inference planner"};
  app.require_subcommand(1);
  // Common flags may appear after the subcommand; inherited by subcommands created below.
  app.fallthrough();

  std::optional<std::string> out;
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
  int oracle_pts = 0;
  app.add_option("--out", out, "Output file (CSV); stdout when omitted");
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for weights and inputs (verify-bounds)");
  app.add_option("--grid-oracle", oracle_pts, "Add a grid-search oracle column with PTS per axis")
      ->check(CLI::Range(2, 200));

  std::string config;
  std::vector<std::string> schemes;
  auto* optimize = app.add_subcommand("optimize", "Solve one scenario");
  optimize->add_option("config", config, "Scenario file")->required();
  optimize->add_option("--scheme", schemes, "Scheme(s) to solve; default joint");

  bool timing = false;
  auto* sweep = app.add_subcommand("sweep", "Run the sweep described in a config");
  sweep->add_option("config", config, "Scenario file with a sweep section")->required();
  sweep->add_flag("--timing", timing, "Fill the wall_ms column (breaks byte-identical output)");

  std::string net_spec;
  bool gradient = false;
  auto* verify = app.add_subcommand("verify-bounds", "Check the layer and output distortion bounds");
  verify->add_option("net-spec", net_spec, "Network spec file")->required();
  verify->add_flag("--gradient", gradient, "Also report the first-order distortion estimate");

  std::string weights;
  auto* fit = app.add_subcommand("fit", "Fit Laplace and Gaussian models to weights");
  fit->add_option("weights-file", weights, "Text (one value per line) or float32 .bin")->required();

  int points = 21;
  auto* rd = app.add_subcommand("rd", "Print the distortion bound against the pruning ratio");
  rd->add_option("config", config, "Scenario file")->required();
  rd->add_option("--points", points, "Curve points")->check(CLI::Range(1, 100000));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) return cmd_optimize(config, schemes, out, oracle_pts);
    if (*sweep) return cmd_sweep(config, out, workers, oracle_pts, timing);
    if (*verify) return cmd_verify(net_spec, seed, gradient);
    if (*fit) return cmd_fit(weights, workers);
    if (*rd) return cmd_rd(config, points, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return 0;
}
