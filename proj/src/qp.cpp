#include "safeqp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace safeqp::qp {

namespace {

constexpr int kMaxIterationsBase = 200;

// Exact-penalty weight for the phase-1 slack variable. Infeasibility is
// declared only when the optimal slack stays above kPhase1Threshold; for any
// feasible system whose multipliers are below kPhase1Penalty the optimal
// slack is exactly zero, so the two regimes are separated by several orders
// of magnitude at the problem scales this solver is built for.
constexpr double kPhase1Penalty = 1e5;
constexpr double kPhase1Threshold = 1e-6;

}  // namespace

double KktResiduals::max() const {
  return std::max({primal, stationarity, dual, complementarity});
}

struct ActiveSetSolver::Rows {
  Eigen::MatrixXd G;  // all effective rows
  Eigen::VectorXd h;

  int count() const { return static_cast<int>(G.rows()); }
};

// Builds the effective row system: problem rows first, then box rows on the
// last coordinate (index m for the upper bound, m+1 for the lower bound).
static void build_rows(const Problem& prob, Eigen::MatrixXd& G,
                       Eigen::VectorXd& h) {
  const int m = static_cast<int>(prob.G.rows());
  const int d = prob.dim();
  int extra = 0;
  if (std::isfinite(prob.box_high)) ++extra;
  if (std::isfinite(prob.box_low)) ++extra;
  G.resize(m + extra, d);
  h.resize(m + extra);
  if (m > 0) {
    G.topRows(m) = prob.G;
    h.head(m) = prob.h;
  }
  int r = m;
  if (std::isfinite(prob.box_high)) {
    G.row(r).setZero();
    G(r, d - 1) = 1.0;
    h(r) = prob.box_high;
    ++r;
  }
  if (std::isfinite(prob.box_low)) {
    G.row(r).setZero();
    G(r, d - 1) = -1.0;
    h(r) = -prob.box_low;
    ++r;
  }
}

Solution ActiveSetSolver::run_active_set(const Rows& rows,
                                         const Eigen::VectorXd& target,
                                         const Eigen::VectorXd& start) {
  const int d = static_cast<int>(target.size());
  const int m = rows.count();
  const int max_iter = kMaxIterationsBase + 10 * m;

  Eigen::VectorXd u = start;
  std::vector<int> work;  // working set, kept sorted for determinism
  work.reserve(d);

  Solution sol;
  for (int iter = 0; iter < max_iter; ++iter) {
    sol.iterations = iter + 1;

    // Step direction: project (target - u) onto the nullspace of the
    // working-set rows.
    Eigen::VectorXd grad = target - u;
    Eigen::VectorXd step;
    Eigen::MatrixXd W(static_cast<int>(work.size()), d);
    for (size_t k = 0; k < work.size(); ++k) W.row(static_cast<int>(k)) = rows.G.row(work[k]);
    if (work.empty()) {
      step = grad;
    } else {
      // QR of W' gives an orthonormal range basis; remove that component.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(W.transpose());
      Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, static_cast<int>(work.size()));
      step = grad - Q * (Q.transpose() * grad);
    }

    const double step_scale = 1.0 + target.norm();
    if (step.norm() <= 1e-13 * step_scale) {
      // Stationary on the working set; check multipliers.
      if (work.empty()) {
        sol.status = Status::Optimal;
        sol.u = u;
        sol.active_set.clear();
        sol.multipliers.resize(0);
        return sol;
      }
      Eigen::VectorXd lambda =
          W.transpose().colPivHouseholderQr().solve(grad);
      int drop = -1;
      double most_negative = -1e-11 * step_scale;
      for (size_t k = 0; k < work.size(); ++k) {
        if (lambda(static_cast<int>(k)) < most_negative) {
          most_negative = lambda(static_cast<int>(k));
          drop = static_cast<int>(k);
        }
      }
      if (drop < 0) {
        sol.status = Status::Optimal;
        sol.u = u;
        sol.active_set = work;
        sol.multipliers = lambda.cwiseMax(0.0);
        return sol;
      }
      work.erase(work.begin() + drop);
      continue;
    }

    // Ratio test: longest step along `step` before a non-working row blocks.
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < m; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double gs = rows.G.row(i).dot(step);
      if (gs <= 1e-13 * (1.0 + step.norm())) continue;
      const double slack = rows.h(i) - rows.G.row(i).dot(u);
      double ratio = slack / gs;
      if (ratio < 0.0) ratio = 0.0;  // numerically active row
      // Strict improvement keeps the lowest row index on ties.
      if (ratio < alpha - 1e-12) {
        alpha = ratio;
        blocking = i;
      }
    }

    u += alpha * step;
    if (blocking >= 0) {
      work.insert(std::upper_bound(work.begin(), work.end(), blocking),
                  blocking);
    }
  }
  throw std::runtime_error("ActiveSetSolver: iteration limit exceeded");
}

bool ActiveSetSolver::find_feasible_start(const Rows& rows,
                                          Eigen::VectorXd& start) {
  const int d = static_cast<int>(rows.G.cols());
  const int m = rows.count();

  auto feasible = [&](const Eigen::VectorXd& u) {
    for (int i = 0; i < m; ++i)
      if (rows.G.row(i).dot(u) > rows.h(i) + tol_.feasibility) return false;
    return true;
  };

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  if (feasible(zero)) {
    start = zero;
    return true;
  }

  // Phase 1: minimize 0.5|u|^2 + 0.5 t^2 + M t  subject to
  //   G u - t <= h,  -t <= 0.
  // This reuses the identity-Hessian machinery with target [0; -M]. The
  // linear penalty is exact: a feasible system yields t* = 0.
  Rows aug;
  aug.G.resize(m + 1, d + 1);
  aug.h.resize(m + 1);
  aug.G.topLeftCorner(m, d) = rows.G;
  aug.G.topRightCorner(m, 1).setConstant(-1.0);
  aug.G.row(m).setZero();
  aug.G(m, d) = -1.0;
  aug.h.head(m) = rows.h;
  aug.h(m) = 0.0;

  Eigen::VectorXd aug_target = Eigen::VectorXd::Zero(d + 1);
  aug_target(d) = -kPhase1Penalty;

  double t0 = 1.0;
  for (int i = 0; i < m; ++i) t0 = std::max(t0, -rows.h(i) + 1.0);
  Eigen::VectorXd aug_start = Eigen::VectorXd::Zero(d + 1);
  aug_start(d) = t0;

  Solution phase1 = run_active_set(aug, aug_target, aug_start);
  const double h_scale = 1.0 + rows.h.cwiseAbs().maxCoeff();
  if (phase1.u(d) > kPhase1Threshold * h_scale) return false;
  start = phase1.u.head(d);
  return true;
}

Solution ActiveSetSolver::solve(const Problem& prob) {
  if (!prob.target.allFinite() || (prob.G.size() > 0 && !prob.G.allFinite()) ||
      (prob.h.size() > 0 && !prob.h.allFinite()))
    throw std::invalid_argument("qp::solve: non-finite problem data");
  if (prob.G.rows() != prob.h.size())
    throw std::invalid_argument("qp::solve: G/h row mismatch");
  if (prob.G.rows() > 0 && prob.G.cols() != prob.dim())
    throw std::invalid_argument("qp::solve: G column/dim mismatch");

  Rows rows;
  build_rows(prob, rows.G, rows.h);

  Eigen::VectorXd start;
  if (!find_feasible_start(rows, start)) {
    Solution sol;
    sol.status = Status::Infeasible;
    return sol;
  }
  return run_active_set(rows, prob.target, start);
}

KktResiduals kkt_residuals(const Problem& prob, const Solution& sol) {
  KktResiduals res;
  if (sol.status != Status::Optimal) return res;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  build_rows(prob, G, h);

  for (int i = 0; i < G.rows(); ++i)
    res.primal = std::max(res.primal, G.row(i).dot(sol.u) - h(i));
  res.primal = std::max(res.primal, 0.0);

  Eigen::VectorXd stat = sol.u - prob.target;
  for (size_t k = 0; k < sol.active_set.size(); ++k) {
    const int i = sol.active_set[k];
    stat += sol.multipliers(static_cast<int>(k)) * G.row(i).transpose();
    res.dual = std::max(res.dual, -sol.multipliers(static_cast<int>(k)));
    res.complementarity =
        std::max(res.complementarity,
                 std::abs(sol.multipliers(static_cast<int>(k)) *
                          (G.row(i).dot(sol.u) - h(i))));
  }
  res.dual = std::max(res.dual, 0.0);
  res.stationarity = stat.norm();
  return res;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace {

void subsets_up_to(int m, int max_size,
                   const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> subset;
  // Iterative enumeration by size keeps ordering deterministic.
  std::function<void(int, int)> rec = [&](int start, int remaining) {
    if (remaining == 0) {
      visit(subset);
      return;
    }
    for (int i = start; i <= m - remaining; ++i) {
      subset.push_back(i);
      rec(i + 1, remaining - 1);
      subset.pop_back();
    }
  };
  for (int size = 0; size <= max_size; ++size) rec(0, size);
}

}  // namespace

Solution brute_force_oracle(const Problem& prob, Tolerances tol) {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  build_rows(prob, G, h);
  const int m = static_cast<int>(G.rows());
  const int d = prob.dim();
  if (m > 18)
    throw std::invalid_argument("brute_force_oracle: too many constraint rows");

  const double scale = 1.0 + prob.target.norm();
  bool found = false;
  double best_obj = 0.0;
  Solution best;

  subsets_up_to(m, d, [&](const std::vector<int>& subset) {
    const int k = static_cast<int>(subset.size());
    Eigen::VectorXd u;
    Eigen::VectorXd lambda(k);
    if (k == 0) {
      u = prob.target;
      lambda.resize(0);
    } else {
      Eigen::MatrixXd S(k, d);
      Eigen::VectorXd hs(k);
      for (int r = 0; r < k; ++r) {
        S.row(r) = G.row(subset[r]);
        hs(r) = h(subset[r]);
      }
      // Equality KKT: u = target - S'lambda with S u = hs.
      Eigen::MatrixXd gram = S * S.transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeFullU |
                                                      Eigen::ComputeFullV);
      if (svd.singularValues()(k - 1) <
          tol.rank * std::max(1.0, svd.singularValues()(0)))
        return;  // rank-deficient subset
      lambda = svd.solve(S * prob.target - hs);
      u = prob.target - S.transpose() * lambda;
      for (int r = 0; r < k; ++r)
        if (lambda(r) < -1e-9 * scale) return;  // dual infeasible
    }
    for (int i = 0; i < m; ++i)
      if (G.row(i).dot(u) > h(i) + tol.feasibility * scale) return;
    const double obj = prob.objective(u);
    if (!found || obj < best_obj - 1e-12 * scale * scale) {
      found = true;
      best_obj = obj;
      best.status = Status::Optimal;
      best.u = u;
      best.active_set = subset;
      best.multipliers = lambda.cwiseMax(0.0);
    }
  });

  if (found) return best;

  // No KKT candidate: the feasible set must be empty. Confirm with a Farkas
  // certificate (lambda >= 0, G'lambda = 0, h'lambda < 0) over subsets of
  // size <= d+1, which is complete for empty polyhedra by Caratheodory.
  bool certified = false;
  subsets_up_to(m, d + 1, [&](const std::vector<int>& subset) {
    if (certified || subset.empty()) return;
    const int k = static_cast<int>(subset.size());
    Eigen::MatrixXd St(d, k);
    Eigen::VectorXd hs(k);
    for (int r = 0; r < k; ++r) {
      St.col(r) = G.row(subset[r]).transpose();
      hs(r) = h(subset[r]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        St, Eigen::ComputeFullU | Eigen::ComputeFullV);
    // Nullspace vectors of St are candidate multiplier directions.
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    for (int c = 0; c < k; ++c) {
      if (c < sv.size() && sv(c) > 1e-10 * std::max(1.0, smax)) continue;
      Eigen::VectorXd lam = svd.matrixV().col(c);
      for (int sign = 0; sign < 2; ++sign) {
        Eigen::VectorXd cand = sign ? Eigen::VectorXd(-lam) : lam;
        if ((cand.array() < -1e-10).any()) continue;
        if (cand.maxCoeff() <= 1e-10) continue;
        if (hs.dot(cand) < -1e-10 * (1.0 + hs.cwiseAbs().maxCoeff()))
          certified = true;
      }
    }
  });

  if (!certified)
    throw std::runtime_error(
        "brute_force_oracle: no KKT candidate and no Farkas certificate");
  Solution sol;
  sol.status = Status::Infeasible;
  return sol;
}

// ---------------------------------------------------------------------------
// Closed-form active-set solution
// ---------------------------------------------------------------------------

std::pair<Eigen::VectorXd, double> closed_form_active(
    const Eigen::VectorXd& v_c, double delta, const Eigen::MatrixXd& A_active,
    const Eigen::VectorXd& a_active, double rank_tol) {
  const int n = static_cast<int>(v_c.size());
  const int k = static_cast<int>(A_active.rows());
  Eigen::VectorXd r(n + 1);
  r.head(n) = v_c;
  r(n) = delta;
  if (k == 0) return {v_c, delta};

  Eigen::MatrixXd M(k, n + 1);
  M.leftCols(n) = A_active;
  M.col(n) = a_active;

  Eigen::MatrixXd MMt = M * M.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(MMt, Eigen::ComputeFullU |
                                                 Eigen::ComputeFullV);
  if (svd.singularValues()(k - 1) <
      rank_tol * std::max(1.0, svd.singularValues()(0)))
    throw std::runtime_error("closed_form_active: rank-deficient active set");

  Eigen::VectorXd u = r - M.transpose() * svd.solve(M * r);

  // Rank-one-update form of the relaxation component.
  Eigen::MatrixXd AAt = A_active * A_active.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svdA(AAt, Eigen::ComputeFullU |
                                                  Eigen::ComputeFullV);
  if (svdA.singularValues()(k - 1) <
      rank_tol * std::max(1.0, svdA.singularValues()(0)))
    throw std::runtime_error("closed_form_active: rank-deficient A_active");
  const double num = delta - a_active.dot(svdA.solve(A_active * v_c));
  const double den = 1.0 + a_active.dot(svdA.solve(a_active));
  const double delta_i = num / den;

  if (std::abs(delta_i - u(n)) > 1e-8 * (1.0 + std::abs(delta)))
    throw std::runtime_error(
        "closed_form_active: projection and rank-one forms disagree");
  return {u.head(n), delta_i};
}

}  // namespace safeqp::qp
