#include "safeqp/barrier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace safeqp::barrier {

void BarrierSpec::validate() const {
  if (!(D > 0.0)) throw std::invalid_argument("BarrierSpec: D must be > 0");
  if (!(D_s > 0.0)) throw std::invalid_argument("BarrierSpec: D_s must be > 0");
  if (!(alpha_v_slope > 0.0))
    throw std::invalid_argument("BarrierSpec: alpha_v_slope must be > 0");
}

double mu(double s, const BarrierSpec& spec) {
  if (!(s > -spec.D_s))
    throw std::domain_error("mu: argument " + std::to_string(s) +
                            " outside domain (-D_s, inf)");
  return 1.0 / (s + spec.D_s);
}

double mu_inverse(double v, const BarrierSpec& spec) {
  if (!(v > 0.0))
    throw std::domain_error("mu_inverse: argument must be > 0");
  return 1.0 / v - spec.D_s;
}

double alpha_mu(double v, const BarrierSpec&) {
  if (!(v >= 0.0))
    throw std::domain_error("alpha_mu: argument must be >= 0");
  // -mu'(mu^{-1}(v)) with mu'(s) = -(s + D_s)^-2 and mu^{-1}(v) + D_s = 1/v.
  return v * v;
}

double alpha_v(double s, const BarrierSpec& spec) {
  return spec.alpha_v_slope * s;
}

double mu0(const BarrierSpec& spec) { return 1.0 / spec.D_s; }

double barrier_value(const Eigen::VectorXd& p_rel, const BarrierSpec& spec) {
  const double dist = p_rel.norm();
  if (!(dist > 0.0))
    throw std::domain_error("barrier_value: zero relative position");
  return mu(dist - spec.D_s, spec);
}

}  // namespace safeqp::barrier
