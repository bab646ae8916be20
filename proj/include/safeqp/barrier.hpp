#pragma once

#include <Eigen/Dense>

namespace safeqp::barrier {

/// Shaping family for the proximity measure mu. Only the reciprocal family
/// mu(s) = 1/(s + D_s) is implemented; the enum leaves room for other
/// strictly-decreasing strictly-convex families without interface changes.
enum class MuFamily { Reciprocal };

/// Pairwise safety parameters: hard safety distance D, safety margin D_s,
/// and the slope of the linear class-K^e comparison function
/// alpha_V(s) = alpha_v_slope * s.
struct BarrierSpec {
  double D = 0.0;
  double D_s = 0.0;
  MuFamily mu_family = MuFamily::Reciprocal;
  double alpha_v_slope = 1.0;

  void validate() const;  // throws std::invalid_argument on bad parameters
};

// mu(s) = 1/(s + D_s), defined for s > -D_s. Throws std::domain_error outside.
double mu(double s, const BarrierSpec& spec);

// Inverse of mu: mu_inverse(v) = 1/v - D_s for v > 0.
double mu_inverse(double v, const BarrierSpec& spec);

// alpha_mu(v) = -mu'(mu^{-1}(v)) for v > 0, and 0 at v = 0.
// For the reciprocal family this evaluates to v^2 exactly.
double alpha_mu(double v, const BarrierSpec& spec);

// Linear class-K^e comparison function alpha_V(s) = alpha_v_slope * s.
double alpha_v(double s, const BarrierSpec& spec);

// mu(0), the proximity value at exactly the safety margin.
double mu0(const BarrierSpec& spec);

// Pairwise proximity value V(p_rel) = mu(|p_rel| - D_s); larger means closer.
// Throws std::domain_error when p_rel == 0 (singular direction).
double barrier_value(const Eigen::VectorXd& p_rel, const BarrierSpec& spec);

}  // namespace safeqp::barrier
