#pragma once

#include <Eigen/Dense>
#include <limits>
#include <utility>
#include <vector>

namespace safeqp::qp {

/// Strictly convex QP with identity Hessian:
///   minimize  0.5 u'u - target'u   subject to  G u <= h,
/// optionally with box bounds on the last coordinate (folded into two extra
/// constraint rows with indices G.rows() and G.rows()+1).
struct Problem {
  Eigen::VectorXd target;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  double box_low = -std::numeric_limits<double>::infinity();
  double box_high = std::numeric_limits<double>::infinity();

  bool has_box() const { return std::isfinite(box_low) || std::isfinite(box_high); }
  int dim() const { return static_cast<int>(target.size()); }
  double objective(const Eigen::VectorXd& u) const {
    return 0.5 * u.squaredNorm() - target.dot(u);
  }
};

enum class Status { Optimal, Infeasible };

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd u;
  std::vector<int> active_set;    // effective row indices (box rows appended)
  Eigen::VectorXd multipliers;    // one per active_set entry, >= 0
  int iterations = 0;
};

struct Tolerances {
  double feasibility = 1e-9;
  double rank = 1e-10;
  double oracle = 1e-8;
};

struct KktResiduals {
  double primal = 0.0;         // max constraint violation
  double stationarity = 0.0;   // |u - target + G_active' lambda|
  double dual = 0.0;           // max(0, -min lambda)
  double complementarity = 0.0;
  double max() const;
};

/// Primal active-set solver. Holds mutable workspaces; use one instance per
/// thread. Problems and solutions are plain values and freely shareable.
class ActiveSetSolver {
 public:
  explicit ActiveSetSolver(Tolerances tol = {}) : tol_(tol) {}

  Solution solve(const Problem& prob);

  const Tolerances& tolerances() const { return tol_; }

 private:
  // Effective constraint system: G rows followed by the box rows, if any.
  struct Rows;
  Solution run_active_set(const Rows& rows, const Eigen::VectorXd& target,
                          const Eigen::VectorXd& start);
  bool find_feasible_start(const Rows& rows, Eigen::VectorXd& start);

  Tolerances tol_;
};

/// Exhaustive reference solver for small instances (<= 16 constraint rows):
/// enumerates KKT candidates over all active subsets of size <= dim, and
/// certifies infeasibility through a Farkas certificate search. Independent
/// of ActiveSetSolver by construction.
Solution brute_force_oracle(const Problem& prob, Tolerances tol = {});

/// Closed-form solution of the equality-constrained projection with active
/// rows [A_active, a_active] applied to the target [v_c; delta]:
///   u = (I - M'(MM')^{-1}M)[v_c; delta],  M = [A_active, a_active].
/// Returns (v_star, delta_i); delta_i is cross-checked against the
/// rank-one-update form. Throws std::runtime_error when MM' is singular.
std::pair<Eigen::VectorXd, double> closed_form_active(
    const Eigen::VectorXd& v_c, double delta, const Eigen::MatrixXd& A_active,
    const Eigen::VectorXd& a_active, double rank_tol = 1e-10);

/// KKT residuals of a solution against its problem (box rows included).
KktResiduals kkt_residuals(const Problem& prob, const Solution& sol);

}  // namespace safeqp::qp
