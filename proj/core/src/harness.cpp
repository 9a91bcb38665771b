#include "coinfer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "coinfer/error.hpp"

namespace coinfer {

double LayeredModelSpec::total_params() const {
  double sum = 0.0;
  for (const LayerRecord& l : layers) sum += l.params_count;
  return sum;
}

double LayeredModelSpec::total_flops() const {
  double sum = 0.0;
  for (const LayerRecord& l : layers) sum += l.flops;
  return sum;
}

double LayeredModelSpec::entropy() const {
  if (entropy_bits) return *entropy_bits;
  // Each coordinate of layer l is Laplace with rate lambda_l: log2(2e / lambda_l) bits.
  double h = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h += layers[i].params_count * std::log2(2.0 * std::exp(1.0) / layer_scales[i]);
  }
  return h;
}

void validate(const LayeredModelSpec& spec) {
  const std::string p = "layered_model";
  if (spec.layers.empty()) throw ConfigError(p + ".layers", "must not be empty");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerRecord& l = spec.layers[i];
    const std::string lp = p + ".layers[" + std::to_string(i) + "]";
    if (!(l.params_count >= 0.0) || !std::isfinite(l.params_count)) {
      throw ConfigError(lp + ".params_count", "must be a nonnegative number");
    }
    if (!(l.flops >= 0.0) || !std::isfinite(l.flops)) {
      throw ConfigError(lp + ".flops", "must be a nonnegative number");
    }
    if (!(l.embedding_bits_out >= 0.0) || !std::isfinite(l.embedding_bits_out)) {
      throw ConfigError(lp + ".embedding_bits_out", "must be a nonnegative number");
    }
  }
  if (!(spec.total_params() > 0.0)) throw ConfigError(p + ".layers", "model has no parameters");
  if (!(spec.bits_per_param > 0.0)) throw ConfigError(p + ".bits_per_param", "must be positive");
  if (!(spec.raw_input_bits >= 0.0)) throw ConfigError(p + ".raw_input_bits", "must be nonnegative");
  if (!spec.entropy_bits) {
    if (spec.layer_scales.size() != spec.layers.size()) {
      throw ConfigError(p + ".layer_scales", "need entropy_bits or one scale per layer");
    }
    for (double s : spec.layer_scales) {
      if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError(p + ".layer_scales", "must be positive");
    }
  } else if (!std::isfinite(*spec.entropy_bits)) {
    throw ConfigError(p + ".entropy_bits", "must be finite");
  }
}

Scenario scenario_at_split(const LayeredModelSpec& spec, std::size_t split, const Scenario& base) {
  validate(spec);
  const std::size_t n = spec.layers.size();
  if (split > n) throw DomainError("scenario_at_split: split index beyond the layer count");
  Scenario sc = base;
  ModelProfile& m = sc.model;
  m = ModelProfile{};
  for (std::size_t i = 0; i < n; ++i) {
    const LayerRecord& l = spec.layers[i];
    if (i < split) {
      m.q_device_params += l.params_count;
      m.n_flop_device += l.flops;
    } else {
      m.s_server_params += l.params_count;
      m.n_flop_server += l.flops;
    }
  }
  m.bits_per_param = spec.bits_per_param;
  m.entropy_bits = spec.entropy();
  m.raw_input_bits = spec.raw_input_bits;
  if (split == 0) {
    m.theta_embedding_bits = spec.raw_input_bits;
  } else if (split == n) {
    m.theta_embedding_bits = 0.0;
  } else {
    m.theta_embedding_bits = spec.layers[split - 1].embedding_bits_out;
  }
  return sc;
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kTMax: return "t_max";
    case SweepAxis::kEMax: return "e_max";
    case SweepAxis::kSplitPoint: return "split_point";
    case SweepAxis::kNone: return "none";
  }
  return "unknown";
}

Scenario sweep_cell_scenario(const RunConfig& cfg, double axis_value) {
  if (!cfg.sweep) throw ConfigError("sweep", "missing sweep section");
  Scenario sc = cfg.scenario;
  switch (cfg.sweep->axis) {
    case SweepAxis::kTMax: sc.qos.t_max = axis_value; break;
    case SweepAxis::kEMax: sc.qos.e_max = axis_value; break;
    case SweepAxis::kSplitPoint:
      if (!cfg.layered) throw ConfigError("sweep.axis", "split_point needs a layered_model");
      sc = scenario_at_split(*cfg.layered, static_cast<std::size_t>(axis_value), cfg.scenario);
      break;
    case SweepAxis::kNone: break;
  }
  return sc;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const SweepOptions& opts) {
  if (!cfg.sweep) throw ConfigError("sweep", "missing sweep section");
  const SweepSpec& spec = *cfg.sweep;

  struct Cell {
    double value;
    BenchmarkScheme scheme;
  };
  std::vector<Cell> cells;
  for (double v : spec.values) {
    for (BenchmarkScheme s : spec.schemes) cells.push_back({v, s});
  }
  std::vector<SweepRow> rows(cells.size());

  auto run_cell = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.axis = spec.axis;
    row.axis_value = cells[i].value;
    row.scheme = cells[i].scheme;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Scenario sc = sweep_cell_scenario(cfg, row.axis_value);
      const SolveTrace tr = solve_benchmark(row.scheme, sc, cfg.solver);
      row.status = tr.status;
      row.iterations = tr.iterations;
      if (tr.feasible()) {
        row.decision = tr.decision;
        row.metrics = tr.metrics;
      }
      if (opts.grid_oracle_pts > 0) {
        const Scenario eff = scheme_scenario(row.scheme, sc);
        const OracleResult o =
            grid_oracle(eff, opts.grid_oracle_pts, 1, restriction_for(row.scheme, eff));
        if (o.feasible) row.oracle_dhat = o.objective;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      row.status = SolveStatus::kInfeasible;
    }
    if (opts.record_wall_time) {
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(cells.size())));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
    return static_cast<int>(a.scheme) < static_cast<int>(b.scheme);
  });
  return rows;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_header(bool with_oracle) {
  std::string h =
      "axis,axis_value,scheme,status,objective_dhat,rho,f_device_hz,p_tx_w,rho_server,f_server_hz,"
      "t_total_s,e_total_j,rate_bps,iters,wall_ms";
  if (with_oracle) h += ",oracle_dhat";
  return h;
}

std::string format_csv(const std::vector<SweepRow>& rows) {
  const bool with_oracle = std::any_of(rows.begin(), rows.end(),
                                       [](const SweepRow& r) { return r.oracle_dhat.has_value(); });
  std::string out = csv_header(with_oracle) + "\n";
  for (const SweepRow& r : rows) {
    const std::string status = r.error.empty() ? to_string(r.status) : "error";
    out += to_string(r.axis) + "," + format_double(r.axis_value) + "," + to_string(r.scheme) + "," +
           status;
    if (r.feasible()) {
      const Decision& d = r.decision;
      const Metrics& m = r.metrics;
      for (double v : {m.distortion_bound, d.rho, d.f_device, d.p_tx, d.rho_server, d.f_server,
                       m.t_total, m.e_total, m.rate_bps}) {
        out += "," + format_double(v);
      }
      out += "," + std::to_string(r.iterations);
      out += "," + (r.wall_ms ? format_double(*r.wall_ms) : std::string());
    } else {
      out += std::string(11, ',');
    }
    if (with_oracle) out += "," + (r.oracle_dhat ? format_double(*r.oracle_dhat) : std::string());
    out += "\n";
  }
  return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw Error("emit_csv: empty table, nothing written to " + path.string());
  const std::string text = format_csv(rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("emit_csv: cannot open " + path.string());
  out << text;
  if (!out) throw Error("emit_csv: write failed for " + path.string());
}

}  // namespace coinfer
