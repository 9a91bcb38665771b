#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coinfer/dnn_verify.hpp"
#include "coinfer/sca_solver.hpp"
#include "coinfer/system_model.hpp"

namespace coinfer {

struct LayerRecord {
  double params_count = 0.0;
  double flops = 0.0;
  double embedding_bits_out = 0.0;  // bits shipped when cutting after this layer
};

struct LayeredModelSpec {
  std::vector<LayerRecord> layers;
  double bits_per_param = 16.0;
  std::optional<double> entropy_bits;  // whole parameter vector
  std::vector<double> layer_scales;    // per-layer Laplace rates; alternative to entropy_bits
  double raw_input_bits = 0.0;

  double total_params() const;
  double total_flops() const;
  // Entropy of the full parameter vector in bits.
  double entropy() const;
};

void validate(const LayeredModelSpec& spec);

// Profile for cutting after `split` layers (0 = everything on the server).
Scenario scenario_at_split(const LayeredModelSpec& spec, std::size_t split, const Scenario& base);

// kNone labels single-scenario runs.
enum class SweepAxis { kTMax, kEMax, kSplitPoint, kNone };

std::string to_string(SweepAxis a);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kTMax;
  std::vector<double> values;
  std::vector<BenchmarkScheme> schemes;
};

// A parsed configuration document.
struct RunConfig {
  Scenario scenario;  // resolved at `split` when the model is layered
  std::optional<LayeredModelSpec> layered;
  std::optional<std::size_t> split;
  ScaOptions solver;
  std::optional<SweepSpec> sweep;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
RunConfig load_config(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

struct SweepRow {
  SweepAxis axis = SweepAxis::kTMax;
  double axis_value = 0.0;
  BenchmarkScheme scheme = BenchmarkScheme::kJoint;
  SolveStatus status = SolveStatus::kInfeasible;
  Decision decision;
  Metrics metrics;
  int iterations = 0;
  std::optional<double> wall_ms;  // empty unless timing was requested
  std::string error;  // solver exception text, if any
  std::optional<double> oracle_dhat;

  bool feasible() const { return error.empty() && status != SolveStatus::kInfeasible; }
};

struct SweepOptions {
  unsigned workers = 1;
  int grid_oracle_pts = 0;  // 0 disables the oracle column
  bool record_wall_time = false;
};

// Scenario for one sweep cell.
Scenario sweep_cell_scenario(const RunConfig& cfg, double axis_value);

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const SweepOptions& opts = {});

// Fully connected network description for bound verification.
struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // widths, input first
  ActivationSpec activation;
  std::size_t split_index = 0;
  std::uint64_t weight_seed = 0;
  double init_scale = 1.0;
  // Row-major weights of every layer in order; replaces the seeded draw.
  std::optional<std::filesystem::path> weights_file;
  std::vector<double> rho_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<PruneKind> strategies{PruneKind::kMagnitude, PruneKind::kRandom};
  std::size_t inputs = 16;
  std::uint64_t input_seed = 1;
};

NetworkSpec parse_network_spec(const std::string& text, const std::string& source = "<string>");
NetworkSpec load_network_spec(const std::filesystem::path& path);
DnnNetwork build_network(const NetworkSpec& spec);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

std::string csv_header(bool with_oracle);
std::string format_csv(const std::vector<SweepRow>& rows);
void emit_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace coinfer
