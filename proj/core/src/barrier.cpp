#include "coinfer/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coinfer/error.hpp"

namespace coinfer::convex {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FreeIndex {
  std::vector<Eigen::Index> idx;

  explicit FreeIndex(const ConvexProgram& prog) {
    for (Eigen::Index i = 0; i < prog.dim(); ++i) {
      if (prog.lower[i] < prog.upper[i]) idx.push_back(i);
    }
  }
  Eigen::Index size() const { return static_cast<Eigen::Index>(idx.size()); }
};

std::string dump(const char* what, const VectorXd& x, double t) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (t=" << t << ", x=[";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "])";
  return os.str();
}

// Barrier function t c^T x - sum log(-g_i) - sum log(box slacks); +inf
// outside the strict interior.
double barrier_value(const ConvexProgram& prog, const FreeIndex& fi, const VectorXd& x, double t) {
  double v = t * prog.cost.dot(x);
  for (Eigen::Index k : fi.idx) {
    if (std::isfinite(prog.lower[k])) {
      const double s = x[k] - prog.lower[k];
      if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
      v -= std::log(s);
    }
    if (std::isfinite(prog.upper[k])) {
      const double s = prog.upper[k] - x[k];
      if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
      v -= std::log(s);
    }
  }
  for (const Constraint& c : prog.constraints) {
    const double g = c.eval(x, nullptr, nullptr);
    if (!(g < 0.0)) return std::numeric_limits<double>::infinity();
    v -= std::log(-g);
  }
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

// Gradient and Hessian of the barrier function restricted to free coordinates.
void barrier_derivatives(const ConvexProgram& prog, const FreeIndex& fi, const VectorXd& x,
                         double t, VectorXd& grad_f, MatrixXd& hess_f) {
  const Eigen::Index n = prog.dim();
  VectorXd grad = t * prog.cost;
  MatrixXd hess = MatrixXd::Zero(n, n);
  VectorXd g_i(n);
  MatrixXd h_i(n, n);
  for (const Constraint& c : prog.constraints) {
    g_i.setZero();
    h_i.setZero();
    const double g = c.eval(x, &g_i, &h_i);
    const double inv = -1.0 / g;  // > 0
    grad += inv * g_i;
    hess += inv * inv * (g_i * g_i.transpose()) + inv * h_i;
  }
  for (Eigen::Index k : fi.idx) {
    if (std::isfinite(prog.lower[k])) {
      const double s = x[k] - prog.lower[k];
      grad[k] -= 1.0 / s;
      hess(k, k) += 1.0 / (s * s);
    }
    if (std::isfinite(prog.upper[k])) {
      const double s = prog.upper[k] - x[k];
      grad[k] += 1.0 / s;
      hess(k, k) += 1.0 / (s * s);
    }
  }
  const Eigen::Index m = fi.size();
  grad_f.resize(m);
  hess_f.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    grad_f[a] = grad[fi.idx[a]];
    for (Eigen::Index b = 0; b < m; ++b) hess_f(a, b) = hess(fi.idx[a], fi.idx[b]);
  }
}

int barrier_term_count(const ConvexProgram& prog, const FreeIndex& fi) {
  int m = static_cast<int>(prog.constraints.size());
  for (Eigen::Index k : fi.idx) {
    m += std::isfinite(prog.lower[k]) ? 1 : 0;
    m += std::isfinite(prog.upper[k]) ? 1 : 0;
  }
  return m;
}

VectorXd newton_direction(const MatrixXd& hess, const VectorXd& grad) {
  // Scale to unit diagonal; the raw Hessian spans many orders of magnitude
  // near the central path's end.
  const VectorXd d = hess.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt();
  const VectorXd d_inv = d.cwiseInverse();
  MatrixXd hs = d_inv.asDiagonal() * hess * d_inv.asDiagonal();
  const VectorXd gs = d_inv.cwiseProduct(grad);
  for (double reg = 0.0; reg < 1e6; reg = reg == 0.0 ? 1e-12 : reg * 100.0) {
    MatrixXd h = hs;
    h.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
    VectorXd step = ldlt.solve(-gs);
    if (step.allFinite()) return d_inv.cwiseProduct(step);
  }
  return VectorXd();
}

}  // namespace

double max_violation(const ConvexProgram& prog, const VectorXd& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Constraint& c : prog.constraints) {
    const double g = c.eval(x, nullptr, nullptr);
    worst = std::max(worst, std::isnan(g) ? std::numeric_limits<double>::infinity() : g);
  }
  return worst;
}

bool strictly_inside_box(const ConvexProgram& prog, const VectorXd& x) {
  for (Eigen::Index k = 0; k < prog.dim(); ++k) {
    if (prog.lower[k] == prog.upper[k]) continue;
    if (!(x[k] > prog.lower[k] && x[k] < prog.upper[k])) return false;
  }
  return true;
}

VectorXd project_into_box(const ConvexProgram& prog, VectorXd hint, double margin) {
  for (Eigen::Index k = 0; k < prog.dim(); ++k) {
    const double lo = prog.lower[k];
    const double hi = prog.upper[k];
    if (lo == hi) {
      hint[k] = lo;
      continue;
    }
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double pad = margin * (hi - lo);
      hint[k] = std::clamp(hint[k], lo + pad, hi - pad);
    } else if (std::isfinite(lo)) {
      hint[k] = std::max(hint[k], lo + margin * std::max(1.0, std::abs(lo)));
    } else if (std::isfinite(hi)) {
      hint[k] = std::min(hint[k], hi - margin * std::max(1.0, std::abs(hi)));
    }
  }
  return hint;
}

BarrierResult minimize(const ConvexProgram& prog, const VectorXd& x0, const BarrierOptions& opts) {
  const FreeIndex fi(prog);
  const int m = barrier_term_count(prog, fi);
  BarrierResult res;
  res.x = x0;

  const double scale = std::max(std::abs(prog.cost.dot(x0)), 1e-6);
  double t = m > 0 ? m / scale : 1.0;
  if (!std::isfinite(barrier_value(prog, fi, x0, t))) {
    throw NumericError(dump("barrier: start point is not strictly feasible", x0, t));
  }
  if (fi.size() == 0 || m == 0) {
    res.objective = prog.cost.dot(res.x);
    return res;
  }

  VectorXd grad;
  MatrixXd hess;
  VectorXd& x = res.x;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    ++res.outer_iterations;
    for (int it = 0; it < opts.max_newton_per_center; ++it) {
      barrier_derivatives(prog, fi, x, t, grad, hess);
      const VectorXd step = newton_direction(hess, grad);
      if (step.size() == 0) throw NumericError(dump("barrier: singular Newton system", x, t));
      ++res.newton_iterations;
      const double slope = grad.dot(step);
      if (-slope / 2.0 <= opts.centering_tol) break;

      VectorXd full_step = VectorXd::Zero(prog.dim());
      for (Eigen::Index a = 0; a < fi.size(); ++a) full_step[fi.idx[a]] = step[a];
      const double f0 = barrier_value(prog, fi, x, t);
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-20) {
        const VectorXd trial = x + alpha * full_step;
        const double f1 = barrier_value(prog, fi, trial, t);
        if (std::isfinite(f1) && f1 <= f0 + opts.armijo * alpha * slope) {
          x = trial;
          moved = true;
          break;
        }
        alpha *= opts.backtrack;
      }
      // Rounding floor: the model predicts a decrease the arithmetic cannot show.
      if (!moved) break;
    }
    res.duality_gap = m / t;
    if (res.duality_gap <= opts.gap_tol) break;
    t *= opts.t_growth;
  }
  res.objective = prog.cost.dot(x);
  return res;
}

PhaseOneResult find_interior_point(const ConvexProgram& prog, const VectorXd& hint,
                                   const BarrierOptions& opts) {
  const Eigen::Index n = prog.dim();
  VectorXd x = project_into_box(prog, hint);
  PhaseOneResult out;
  if (prog.constraints.empty()) {
    out.x = x;
    out.max_violation = -std::numeric_limits<double>::infinity();
    return out;
  }
  const double v0 = max_violation(prog, x);
  if (!std::isfinite(v0)) {
    throw NumericError(dump("phase I: constraints undefined at the box start point", x, 0.0));
  }

  // Augmented variable s: minimize s s.t. g_i(x) - s <= 0, s >= s_floor.
  ConvexProgram aug;
  aug.cost = VectorXd::Zero(n + 1);
  aug.cost[n] = 1.0;
  aug.lower.resize(n + 1);
  aug.upper.resize(n + 1);
  aug.lower.head(n) = prog.lower;
  aug.upper.head(n) = prog.upper;
  aug.lower[n] = -1.0;
  aug.upper[n] = std::numeric_limits<double>::infinity();
  for (const Constraint& c : prog.constraints) {
    aug.constraints.push_back(
        {c.name + "-s", [&c, n](const VectorXd& z, VectorXd* grad, MatrixXd* hess) {
           const VectorXd xs = z.head(n);
           if (grad == nullptr) return c.eval(xs, nullptr, nullptr) - z[n];
           VectorXd g = VectorXd::Zero(n);
           MatrixXd h = MatrixXd::Zero(n, n);
           const double v = c.eval(xs, &g, &h);
           grad->head(n) = g;
           (*grad)[n] = -1.0;
           hess->topLeftCorner(n, n) = h;
           return v - z[n];
         }});
  }
  VectorXd z(n + 1);
  z.head(n) = x;
  z[n] = std::max(v0, -0.5) + 1.0;

  BarrierOptions p1 = opts;
  p1.gap_tol = std::min(opts.gap_tol, 1e-11);
  const BarrierResult r = minimize(aug, z, p1);
  out.x = r.x.head(n);
  out.max_violation = max_violation(prog, out.x);
  out.newton_iterations = r.newton_iterations;
  return out;
}

}  // namespace coinfer::convex
