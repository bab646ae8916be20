#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "safeqp/barrier.hpp"
#include "safeqp/pbasis.hpp"
#include "safeqp/qp.hpp"
#include "safeqp/world.hpp"

namespace safeqp::filter {

enum class Variant { Conventional, Relaxed, Reshaped };

/// Offset convention for the conventional (unrelaxed) variant: the proximity
/// form alpha_V(V - mu0), or reciprocal-distance offsets referenced to D or
/// to the extended margin D_s.
enum class ConventionalOffset { BarrierAlpha, ReciprocalD, ReciprocalDs };

struct FilterConfig {
  barrier::BarrierSpec barrier;
  double delta = 1.0;                       // relaxation bound (> 0)
  std::optional<pbasis::PositiveBasis> basis;  // required for Reshaped
  double c_K = 1.0;
  double c_P = 1.0;
  Variant variant = Variant::Reshaped;
  ConventionalOffset conv_offset = ConventionalOffset::BarrierAlpha;
  // Relaxation values below latch_fraction * delta latch the agent into
  // permanent braking; separates the {0} and [delta/2, delta] regimes.
  double latch_fraction = 0.25;

  // Throws std::invalid_argument on inconsistent parameters; returns
  // warnings (e.g. c_K below 1/c_A) that do not block execution.
  std::vector<std::string> validate() const;

  double c_M() const;  // conditioning constant of the basis
  mutable double c_M_cache = -1.0;
};

/// Per-agent latch: once the relaxation parameter hits zero the velocity
/// reference is pinned to zero forever.
struct FilterState {
  bool braked = false;
  std::optional<double> braking_time;

  void latch(double t) {
    if (!braked) {
      braked = true;
      braking_time = t;
    }
  }
};

/// Stacked pairwise constraint data for one agent: row k is -phat_ik, and
/// a_s[k] = alpha_V(V_ik - mu0) / delta.
struct ConstraintData {
  Eigen::MatrixXd A_s;       // (n_ao - 1) x n, unit rows
  Eigen::VectorXd a_s;       // (n_ao - 1)
  std::vector<int> others;   // world index per row
};

struct FilterOutcome {
  bool infeasible = false;   // conventional variant only
  Eigen::VectorXd v_star;
  double delta_i = 0.0;
  bool just_latched = false;
  Eigen::VectorXd a_r;       // reshaped offsets (empty otherwise)
  std::vector<int> active_set;
};

ConstraintData build_constraints(int agent, const WorldState& world,
                                 const FilterConfig& cfg);

/// Reshaping map: element (j, k) combines basis row j with constraint row k,
/// blending the aligned offset with the floor -c_P/delta through the
/// saturation sat(c_K (c_A - A^r A^s')).
Eigen::MatrixXd phi(const Eigen::MatrixXd& A_s, const Eigen::VectorXd& a_s,
                    const FilterConfig& cfg);

/// Row-wise maximum of the phi matrix: the reshaped offset vector a_r.
Eigen::VectorXd reshape_offsets(const Eigen::MatrixXd& phi_matrix);

/// Runs the configured safety filter for one agent against a frozen world
/// snapshot. Throws std::domain_error on zero relative positions. The
/// conventional variant may return infeasible = true; the relaxed and
/// reshaped variants always produce a solution.
FilterOutcome filter_velocity(int agent, const Eigen::VectorXd& v_c,
                              const WorldState& world, const FilterConfig& cfg,
                              FilterState& state);

}  // namespace safeqp::filter
