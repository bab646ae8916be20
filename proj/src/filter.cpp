#include "safeqp/filter.hpp"

#include <cmath>
#include <stdexcept>

namespace safeqp::filter {

namespace {

double sat(double r) { return std::max(0.0, std::min(1.0, r)); }

}  // namespace

std::vector<std::string> FilterConfig::validate() const {
  barrier.validate();
  if (!(delta > 0.0))
    throw std::invalid_argument("FilterConfig: delta must be > 0");
  if (!(c_K > 0.0) || !(c_P > 0.0))
    throw std::invalid_argument("FilterConfig: c_K and c_P must be > 0");
  if (!(latch_fraction > 0.0 && latch_fraction < 1.0))
    throw std::invalid_argument("FilterConfig: latch_fraction must be in (0,1)");
  std::vector<std::string> warnings;
  if (variant == Variant::Reshaped) {
    if (!basis.has_value())
      throw std::invalid_argument("FilterConfig: reshaped variant needs a basis");
    if (!(basis->c_A > 0.0 && basis->c_A < 1.0))
      throw std::invalid_argument("FilterConfig: basis c_A must be in (0,1)");
    if (c_K < 1.0 / basis->c_A)
      warnings.push_back(
          "c_K = " + std::to_string(c_K) + " is below 1/c_A = " +
          std::to_string(1.0 / basis->c_A) +
          "; accepted, matching the reference experiments");
  }
  return warnings;
}

double FilterConfig::c_M() const {
  if (c_M_cache < 0.0) {
    if (!basis.has_value())
      throw std::logic_error("FilterConfig::c_M: no basis configured");
    c_M_cache = pbasis::compute_c_M(*basis);
  }
  return c_M_cache;
}

ConstraintData build_constraints(int agent, const WorldState& world,
                                 const FilterConfig& cfg) {
  const int n_ao = world.n_total();
  const int dim = world.dim();
  if (agent < 0 || agent >= world.n_agents)
    throw std::invalid_argument("build_constraints: bad agent index");

  ConstraintData data;
  data.A_s.resize(n_ao - 1, dim);
  data.a_s.resize(n_ao - 1);
  data.others.reserve(n_ao - 1);

  const double m0 = barrier::mu0(cfg.barrier);
  int row = 0;
  for (int j = 0; j < n_ao; ++j) {
    if (j == agent) continue;
    const Eigen::VectorXd p_rel = world.relative_position(agent, j);
    const double dist = p_rel.norm();
    if (!(dist > 0.0))
      throw std::domain_error("build_constraints: coincident positions for " +
                              std::to_string(agent) + " and " + std::to_string(j));
    data.A_s.row(row) = (-p_rel / dist).transpose();
    const double V = barrier::mu(dist - cfg.barrier.D_s, cfg.barrier);
    data.a_s(row) = barrier::alpha_v(V - m0, cfg.barrier) / cfg.delta;
    data.others.push_back(j);
    ++row;
  }
  return data;
}

Eigen::MatrixXd phi(const Eigen::MatrixXd& A_s, const Eigen::VectorXd& a_s,
                    const FilterConfig& cfg) {
  if (!cfg.basis.has_value())
    throw std::logic_error("phi: no basis configured");
  if (A_s.rows() == 0) throw std::invalid_argument("phi: empty constraint set");
  const auto& basis = *cfg.basis;
  const double floor = cfg.c_P / cfg.delta;
  Eigen::MatrixXd X = basis.rows * A_s.transpose();  // n_p x (n_ao-1)
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (int j = 0; j < X.rows(); ++j)
    for (int k = 0; k < X.cols(); ++k) {
      const double x = X(j, k);
      const double s = sat(cfg.c_K * (basis.c_A - x));
      const double aligned = x * a_s(k);
      out(j, k) = aligned - s * (aligned + floor);
    }
  return out;
}

Eigen::VectorXd reshape_offsets(const Eigen::MatrixXd& phi_matrix) {
  if (phi_matrix.size() == 0)
    throw std::invalid_argument("reshape_offsets: empty matrix");
  return phi_matrix.rowwise().maxCoeff();
}

namespace {

FilterOutcome solve_conventional(const Eigen::VectorXd& v_c,
                                 const ConstraintData& data,
                                 const WorldState& world, int agent,
                                 const FilterConfig& cfg) {
  const int m = static_cast<int>(data.A_s.rows());
  Eigen::VectorXd a_o(m);
  for (int k = 0; k < m; ++k) {
    const double dist =
        world.relative_position(agent, data.others[k]).norm();
    switch (cfg.conv_offset) {
      case ConventionalOffset::BarrierAlpha:
        a_o(k) = data.a_s(k) * cfg.delta;
        break;
      case ConventionalOffset::ReciprocalD:
        a_o(k) = 1.0 / dist - 1.0 / cfg.barrier.D;
        break;
      case ConventionalOffset::ReciprocalDs:
        a_o(k) = 1.0 / dist - 1.0 / cfg.barrier.D_s;
        break;
    }
  }

  qp::Problem prob;
  prob.target = v_c;
  prob.G = data.A_s;
  prob.h = -a_o;

  qp::ActiveSetSolver solver;
  qp::Solution sol = solver.solve(prob);

  FilterOutcome out;
  if (sol.status == qp::Status::Infeasible) {
    out.infeasible = true;
    out.v_star = Eigen::VectorXd::Zero(v_c.size());
    out.delta_i = 0.0;
    return out;
  }
  out.v_star = sol.u;
  out.delta_i = cfg.delta;  // no relaxation variable in this variant
  out.active_set = sol.active_set;
  return out;
}

FilterOutcome solve_relaxed_or_reshaped(const Eigen::VectorXd& v_c,
                                        const ConstraintData& data,
                                        const FilterConfig& cfg) {
  const int dim = static_cast<int>(v_c.size());
  Eigen::MatrixXd G;
  Eigen::VectorXd a_r;
  if (cfg.variant == Variant::Reshaped) {
    a_r = reshape_offsets(phi(data.A_s, data.a_s, cfg));
    G.resize(a_r.size(), dim + 1);
    G.leftCols(dim) = cfg.basis->rows;
    G.col(dim) = a_r;
  } else {
    G.resize(data.A_s.rows(), dim + 1);
    G.leftCols(dim) = data.A_s;
    G.col(dim) = data.a_s;
  }

  qp::Problem prob;
  prob.target.resize(dim + 1);
  prob.target.head(dim) = v_c;
  prob.target(dim) = cfg.delta;
  prob.G = G;
  prob.h = Eigen::VectorXd::Zero(G.rows());
  prob.box_low = 0.0;
  prob.box_high = cfg.delta;

  qp::ActiveSetSolver solver;
  qp::Solution sol = solver.solve(prob);
  if (sol.status != qp::Status::Optimal)
    throw std::logic_error("filter: relaxed/reshaped QP reported infeasible");

  FilterOutcome out;
  out.v_star = sol.u.head(dim);
  out.delta_i = sol.u(dim);
  if (out.delta_i < 0.0 && out.delta_i > -1e-9 * cfg.delta) out.delta_i = 0.0;
  out.active_set = sol.active_set;
  if (cfg.variant == Variant::Reshaped) out.a_r = a_r;
  return out;
}

}  // namespace

FilterOutcome filter_velocity(int agent, const Eigen::VectorXd& v_c,
                              const WorldState& world, const FilterConfig& cfg,
                              FilterState& state) {
  const int dim = world.dim();
  if (v_c.size() != dim)
    throw std::invalid_argument("filter_velocity: command dimension mismatch");

  if (state.braked) {
    FilterOutcome out;
    out.v_star = Eigen::VectorXd::Zero(dim);
    out.delta_i = 0.0;
    return out;
  }

  const ConstraintData data = build_constraints(agent, world, cfg);
  FilterOutcome out;
  switch (cfg.variant) {
    case Variant::Conventional:
      return solve_conventional(v_c, data, world, agent, cfg);
    case Variant::Relaxed:
    case Variant::Reshaped:
      out = solve_relaxed_or_reshaped(v_c, data, cfg);
      break;
  }

  if (cfg.variant == Variant::Reshaped) {
    // Zero relaxation forces a zero velocity reference (positive span of the
    // basis rows pinches the feasible velocity set to the origin).
    if (out.delta_i <= 1e-9 * (1.0 + cfg.delta) &&
        out.v_star.norm() > 1e-6 * (1.0 + v_c.norm()))
      throw std::logic_error("filter: zero relaxation with nonzero velocity");

    // Conditioning bound on the solution magnitude.
    const double offset_cap =
        std::max(0.0, out.a_r.size() > 0 ? out.a_r.maxCoeff() : 0.0);
    const double bound = v_c.norm() + cfg.c_M() * std::sqrt(double(dim)) *
                                          cfg.delta * offset_cap;
    if (out.v_star.norm() > bound + 1e-9 * (1.0 + bound))
      throw std::logic_error("filter: velocity bound violated");
  }

  if (out.delta_i < cfg.latch_fraction * cfg.delta) {
    state.latch(world.time);
    out.just_latched = true;
  }
  return out;
}

}  // namespace safeqp::filter
