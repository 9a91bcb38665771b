#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Small dense log-barrier interior-point method for
//
//   minimize c^T x  s.t.  g_i(x) <= 0,  lower <= x <= upper
//
// with smooth convex g_i supplying analytic gradients and Hessians. Variables
// with lower == upper are held fixed. Sized for a handful of variables.
namespace coinfer::convex {

struct Constraint {
  std::string name;
  // Returns g(x). When non-null, grad (size n) and hess (n x n) arrive zeroed
  // and must be filled in. May return +inf or NaN outside its domain.
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)>
      eval;
};

struct ConvexProgram {
  Eigen::VectorXd cost;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Constraint> constraints;

  Eigen::Index dim() const { return cost.size(); }
};

struct BarrierOptions {
  double gap_tol = 1e-8;         // stop when m / t <= gap_tol
  double t_growth = 10.0;        // barrier multiplier
  double armijo = 0.01;          // sufficient-decrease (slope) factor
  double backtrack = 0.5;
  double centering_tol = 1e-12;  // Newton decrement^2 / 2
  int max_newton_per_center = 200;
  int max_outer = 100;
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double duality_gap = 0.0;
  int newton_iterations = 0;
  int outer_iterations = 0;
};

struct PhaseOneResult {
  Eigen::VectorXd x;
  double max_violation = 0.0;  // max_i g_i(x) at the phase-I optimum
  int newton_iterations = 0;
};

// Largest constraint value max_i g_i(x) (box not included).
double max_violation(const ConvexProgram& prog, const Eigen::VectorXd& x);

// True when x is strictly inside the box on every free coordinate.
bool strictly_inside_box(const ConvexProgram& prog, const Eigen::VectorXd& x);

// Moves `hint` into the box interior by at least `margin` of each range.
Eigen::VectorXd project_into_box(const ConvexProgram& prog, Eigen::VectorXd hint,
                                 double margin = 1e-6);

// Minimizes the largest constraint value over the box interior, starting from
// a box-interior point derived from `hint`.
PhaseOneResult find_interior_point(const ConvexProgram& prog, const Eigen::VectorXd& hint,
                                   const BarrierOptions& opts = {});

// x0 must be strictly feasible. Throws NumericError on breakdown.
BarrierResult minimize(const ConvexProgram& prog, const Eigen::VectorXd& x0,
                       const BarrierOptions& opts = {});

}  // namespace coinfer::convex
