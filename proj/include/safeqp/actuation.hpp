#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

namespace safeqp::actuation {

/// Linear actuation dynamics  zdot = A z + B v_ref,  v = C z.
struct LinearActuation {
  Eigen::MatrixXd A;  // m x m, Hurwitz
  Eigen::MatrixXd B;  // m x n
  Eigen::MatrixXd C;  // n x m

  int state_dim() const { return static_cast<int>(A.rows()); }
  int io_dim() const { return static_cast<int>(C.rows()); }

  double max_eigenvalue_real() const;
  bool is_hurwitz() const { return max_eigenvalue_real() < 0.0; }

  // || C A^{-1} B + I ||_2: zero when the DC gain from reference to output
  // is exactly the identity.
  double dc_gain_residual() const;
};

/// Coefficients of the tracking-error envelope
///   |v - v_ref|(t) <= c_v * exp(-lambda t) * |z(0)| + slope * sup|d v_ref/dt|.
struct IosGain {
  double slope = 0.0;
  double c_v = 1.0;
  double lambda = 0.0;
};

struct Assumption1Report {
  int trials = 0;
  double max_violation = 0.0;  // max over trials/time of |vtilde| - envelope
  int violations = 0;          // trials with max_violation > 0
  double worst_ratio = 0.0;    // max |vtilde| / envelope observed
};

/// The identified 8-state, 2-input, 2-output velocity-loop model.
LinearActuation quadrotor_model();

/// Synthetic model with A = -I, B = I, C = I: exact identity DC gain.
LinearActuation synthetic_exact_model(int n);

/// One classical RK4 step of zdot = A z + B v_ref with v_ref held constant.
/// Returns (z_next, v_out = C z_next).
std::pair<Eigen::VectorXd, Eigen::VectorXd> step(const LinearActuation& model,
                                                 const Eigen::VectorXd& z,
                                                 const Eigen::VectorXd& v_ref,
                                                 double dt);

/// Tracking-error gain from the quadratic-form analysis with P = I and
/// Q = -(A + A'): slope = 2 sigma_max(C A^{-1}) sigma_max(B) / lmin(Q - xi I)
/// with xi = xi_fraction * lmin(Q). Throws std::invalid_argument when Q or
/// Q - xi I is not positive definite.
IosGain ios_gain(const LinearActuation& model, double xi_fraction = 0.5);

/// Simulates random smooth bounded reference signals (sums of sinusoids,
/// zero at t = 0) from random initial states and measures the tracking-error
/// envelope. Violations are reported, never thrown.
Assumption1Report verify_assumption1(const LinearActuation& model,
                                     const IosGain& gain, int trials,
                                     unsigned long long seed);

/// JSON import/export: dense matrices, row-major, with a dimension header.
std::string to_json(const LinearActuation& model);
LinearActuation model_from_json(const std::string& text);
LinearActuation load_model(const std::string& path);
void save_model(const LinearActuation& model, const std::string& path);

}  // namespace safeqp::actuation
