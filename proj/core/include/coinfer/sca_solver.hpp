#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coinfer/barrier.hpp"
#include "coinfer/system_model.hpp"

namespace coinfer {

// Linearization point of one SCA round: transmit power and the auxiliary
// inverse pruning ratios rho' = 1/rho, rho~' = 1/rho~.
struct LocalPoint {
  double p_k = 0.0;
  double rho_aux_k = 1.0;
  double rho_server_aux_k = 1.0;
};

enum class SolveStatus { kConverged, kMaxIter, kInfeasible };

enum class BenchmarkScheme {
  kJoint,
  kFixedPower,
  kFixedFrequency,
  kPruneDeviceOnly,
  kPruneServerOnly,
  kOnDeviceOnly,
  kOnServerOnly,
};

std::string to_string(SolveStatus s);
std::string to_string(BenchmarkScheme s);
BenchmarkScheme parse_scheme(const std::string& name);
const std::vector<BenchmarkScheme>& all_schemes();

// Schemes that restrict the joint problem at the same split point.
bool is_restriction(BenchmarkScheme s);

// Variables held fixed during optimization.
struct Restriction {
  std::optional<double> rho;
  std::optional<double> f_device;
  std::optional<double> p_tx;
  std::optional<double> rho_server;
  std::optional<double> f_server;
};

Restriction restriction_for(BenchmarkScheme s, const Scenario& sc);

// Scenario actually optimized by a scheme: the paradigm schemes move the whole
// model to one side. Throws ConfigError when on-server-only lacks raw_input_bits.
Scenario scheme_scenario(BenchmarkScheme s, const Scenario& sc);

struct ScaOptions {
  double epsilon = 1e-6;       // relative objective decrease that ends the loop
  int max_iter = 50;
  double consistency_tol = 1e-6;  // |rho rho' - 1| required at convergence
  double feasibility_tol = 1e-9;  // relative slack for the final feasibility check
  double p_floor = 1e-6;       // p >= p_floor * p_max inside subproblems
  double f_floor = 1e-6;       // f >= f_floor * f_max inside subproblems
  convex::BarrierOptions barrier;
};

struct ZetaValue {
  double value = 0.0;  // J
  double slope = 0.0;  // u(p_k), J/W
};

// d/dp of p*theta/r(p) at p_k.
double upload_energy_slope(double p_k, const Scenario& sc);

// First-order expansion of the upload energy around lp.p_k, evaluated at p.
ZetaValue zeta_linearization(double p, const LocalPoint& lp, const Scenario& sc);

// True when the expansion at p_k upper-bounds the upload energy on `samples`
// points spread over [0.01 p_max, p_max].
bool linearization_dominates(double p_k, const Scenario& sc, int samples = 1000);

// Variable layout inside the convex inner problems.
namespace var {
inline constexpr Eigen::Index kRho = 0;
inline constexpr Eigen::Index kFDevice = 1;   // f / f_max
inline constexpr Eigen::Index kPower = 2;     // p / p_max
inline constexpr Eigen::Index kRhoServer = 3;
inline constexpr Eigen::Index kFServer = 4;   // f~ / f~_max
inline constexpr Eigen::Index kRhoAux = 5;
inline constexpr Eigen::Index kRhoServerAux = 6;
inline constexpr Eigen::Index kCount = 7;
}  // namespace var

struct Subproblem {
  convex::ConvexProgram program;
  LocalPoint lp;
  Scenario scenario;
  bool device_pair_free = true;  // rho and rho' optimized (tangent present)
  bool server_pair_free = true;
  // The inner objective is -(rho q + rho~ s)/(q + s), a monotone surrogate of D̂.
  std::string objective_note;
};

Subproblem build_subproblem(const LocalPoint& lp, const Scenario& sc,
                            const Restriction& fixed = {}, const ScaOptions& opts = {});

struct SubproblemSolution {
  bool feasible = false;
  Decision decision;
  double rho_aux = 1.0;
  double rho_server_aux = 1.0;
  Eigen::VectorXd x;            // scaled variables
  double phase1_violation = 0.0;  // max constraint value after phase I
  bool boundary_only = false;   // no strict interior; phase-I point returned
  int newton_iterations = 0;
  double duality_gap = 0.0;
  double retained_bits = 0.0;   // (rho q + rho~ s) b
};

Eigen::VectorXd to_scaled(const Decision& d, double rho_aux, double rho_server_aux,
                          const Scenario& sc);
Decision from_scaled(const Eigen::VectorXd& x, const Scenario& sc);

// Phase I then barrier. `start` (scaled) seeds phase I when given.
SubproblemSolution solve_subproblem(const Subproblem& sub, const Eigen::VectorXd* start = nullptr,
                                    const ScaOptions& opts = {});

struct SolveIterate {
  Decision decision;
  double rho_aux = 1.0;
  double rho_server_aux = 1.0;
  double objective = 0.0;  // D̂
  int newton_iterations = 0;
  double phase1_violation = 0.0;
};

struct SolveTrace {
  BenchmarkScheme scheme = BenchmarkScheme::kJoint;
  SolveStatus status = SolveStatus::kInfeasible;
  double epsilon = 0.0;
  std::vector<SolveIterate> iterates;  // iterates[0] is the feasible start
  int iterations = 0;                  // inner problems solved
  Decision decision;
  Metrics metrics;
  bool linearization_ok = true;
  std::string message;
  Scenario scenario;  // the scenario actually optimized

  bool feasible() const { return status != SolveStatus::kInfeasible; }
  double objective() const { return metrics.distortion_bound; }
};

// Feasible start: full frequencies and power with the largest common pruning
// ratio that meets both budgets, or a phase-I search when that fails.
std::optional<Decision> initial_point(const Scenario& sc, const Restriction& fixed = {},
                                      const ScaOptions& opts = {});

SolveTrace sca_optimize(const Scenario& sc, const ScaOptions& opts = {},
                        const Restriction& fixed = {});

// SCA seeded from a given feasible decision instead of initial_point().
SolveTrace sca_optimize_from(const Scenario& sc, const Decision& start, const ScaOptions& opts = {},
                             const Restriction& fixed = {});

struct OracleResult {
  bool feasible = false;
  Decision decision;
  double objective = kInf;
  std::size_t evaluated = 0;
};

// Exhaustive search over a pts^5 grid of (rho, f, p, rho~, f~) using evaluate()
// and is_feasible() on the original problem.
OracleResult grid_oracle(const Scenario& sc, int pts_per_axis, unsigned workers = 1,
                         const Restriction& fixed = {});

SolveTrace solve_benchmark(BenchmarkScheme kind, const Scenario& sc, const ScaOptions& opts = {});

}  // namespace coinfer
