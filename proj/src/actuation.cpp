#include "safeqp/actuation.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace safeqp::actuation {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sigma_max(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

double LinearActuation::max_eigenvalue_real() const {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

double LinearActuation::dc_gain_residual() const {
  const Eigen::MatrixXd dc =
      C * A.partialPivLu().solve(B) +
      Eigen::MatrixXd::Identity(io_dim(), io_dim());
  return sigma_max(dc);
}

LinearActuation quadrotor_model() {
  LinearActuation m;
  m.A = Eigen::MatrixXd::Zero(8, 8);
  auto block = [&](int k, double a, double b) {
    m.A(2 * k, 2 * k) = -a;
    m.A(2 * k, 2 * k + 1) = b;
    m.A(2 * k + 1, 2 * k) = -b;
    m.A(2 * k + 1, 2 * k + 1) = -a;
  };
  block(0, 1.58, 2.92);
  block(1, 2.68, 7.18);
  block(2, 2.56, 6.86);
  block(3, 2.14, 3.71);

  m.B = Eigen::MatrixXd::Zero(8, 2);
  m.B.col(0).head(4) << 1.65, 0.65, 1.5, 0.92;
  m.B.col(1).tail(4) << 1.58, 0.84, 1.51, -2.29;

  m.C = Eigen::MatrixXd::Zero(2, 8);
  m.C.row(0).segment(0, 2) << 0.78, -1.98;
  m.C.row(0).segment(4, 2) << 2.13, 2.41;
  m.C.row(1).segment(2, 2) << -2.2, -2.82;
  m.C.row(1).segment(6, 2) << -1.51, -0.99;
  return m;
}

LinearActuation synthetic_exact_model(int n) {
  LinearActuation m;
  m.A = -Eigen::MatrixXd::Identity(n, n);
  m.B = Eigen::MatrixXd::Identity(n, n);
  m.C = Eigen::MatrixXd::Identity(n, n);
  return m;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> step(const LinearActuation& model,
                                                 const Eigen::VectorXd& z,
                                                 const Eigen::VectorXd& v_ref,
                                                 double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("actuation::step: dt must be > 0");
  const Eigen::VectorXd bu = model.B * v_ref;
  const Eigen::VectorXd k1 = model.A * z + bu;
  const Eigen::VectorXd k2 = model.A * (z + 0.5 * dt * k1) + bu;
  const Eigen::VectorXd k3 = model.A * (z + 0.5 * dt * k2) + bu;
  const Eigen::VectorXd k4 = model.A * (z + dt * k3) + bu;
  Eigen::VectorXd z_next = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return {z_next, model.C * z_next};
}

IosGain ios_gain(const LinearActuation& model, double xi_fraction) {
  if (!(xi_fraction > 0.0 && xi_fraction < 1.0))
    throw std::invalid_argument("ios_gain: xi_fraction must be in (0,1)");
  const int m = model.state_dim();
  const Eigen::MatrixXd Q = -(model.A + model.A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  const double q_min = es.eigenvalues().minCoeff();
  if (!(q_min > 0.0))
    throw std::invalid_argument("ios_gain: -(A + A') is not positive definite");
  const double xi = xi_fraction * q_min;
  const Eigen::MatrixXd shifted = Q - xi * Eigen::MatrixXd::Identity(m, m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(shifted);
  const double denom = es2.eigenvalues().minCoeff();
  if (!(denom > 0.0))
    throw std::invalid_argument("ios_gain: Q - xi I is not positive definite");

  const Eigen::MatrixXd C_zeta = model.C * model.A.partialPivLu().solve(
                                     Eigen::MatrixXd::Identity(m, m));
  IosGain gain;
  // P = I throughout: the extreme eigenvalues of P are all 1.
  gain.slope = 2.0 * sigma_max(C_zeta) * sigma_max(model.B) / denom;
  // Transient envelope in terms of |z(0)| for references that start at zero:
  // zeta(0) = A z(0), so |zeta(0)| <= sigma_max(A) |z(0)|.
  gain.c_v = std::max(1.0, sigma_max(C_zeta) * sigma_max(model.A));
  gain.lambda = xi / 2.0;
  return gain;
}

Assumption1Report verify_assumption1(const LinearActuation& model,
                                     const IosGain& gain, int trials,
                                     unsigned long long seed) {
  if (trials < 10)
    throw std::invalid_argument("verify_assumption1: need at least 10 trials");
  std::mt19937_64 rng(seed);
  Assumption1Report report;
  report.trials = trials;

  const int n = model.io_dim();
  const double dt = 1e-3;
  const double horizon = 8.0;
  const int steps = static_cast<int>(horizon / dt);

  for (int trial = 0; trial < trials; ++trial) {
    // Sum of sinusoids per channel, zero at t = 0 so zeta(0) = A z(0).
    const int terms = 3;
    Eigen::MatrixXd amp(n, terms), freq(n, terms);
    for (int c = 0; c < n; ++c)
      for (int k = 0; k < terms; ++k) {
        amp(c, k) = 2.0 * (uniform01(rng) - 0.5);
        freq(c, k) = 0.3 + 4.0 * uniform01(rng);
      }
    Eigen::VectorXd z(model.state_dim());
    for (int i = 0; i < model.state_dim(); ++i)
      z(i) = uniform01(rng) - 0.5;
    const double z0_norm = z.norm();

    auto v_ref_at = [&](double t) {
      Eigen::VectorXd v(n);
      for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int k = 0; k < terms; ++k) s += amp(c, k) * std::sin(freq(c, k) * t);
        v(c) = s;
      }
      return v;
    };
    auto v_ref_rate_at = [&](double t) {
      Eigen::VectorXd v(n);
      for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int k = 0; k < terms; ++k)
          s += amp(c, k) * freq(c, k) * std::cos(freq(c, k) * t);
        v(c) = s;
      }
      return v;
    };

    double rate_sup = 0.0;
    double trial_worst = -std::numeric_limits<double>::infinity();
    for (int s = 0; s <= steps; ++s) {
      const double t = s * dt;
      rate_sup = std::max(rate_sup, v_ref_rate_at(t).norm());
      const Eigen::VectorXd vtilde = model.C * z - v_ref_at(t);
      const double envelope =
          gain.c_v * std::exp(-gain.lambda * t) * z0_norm +
          gain.slope * rate_sup;
      const double violation = vtilde.norm() - envelope;
      trial_worst = std::max(trial_worst, violation);
      if (envelope > 1e-12)
        report.worst_ratio =
            std::max(report.worst_ratio, vtilde.norm() / envelope);
      if (s < steps) z = step(model, z, v_ref_at(t), dt).first;
    }
    report.max_violation = std::max(report.max_violation, trial_worst);
    if (trial_worst > 0.0) ++report.violations;
  }
  return report;
}

std::string to_json(const LinearActuation& model) {
  nlohmann::json j;
  j["m"] = model.state_dim();
  j["n"] = model.io_dim();
  auto dump = [](const Eigen::MatrixXd& M) {
    auto rows = nlohmann::json::array();
    for (int r = 0; r < M.rows(); ++r) {
      auto row = nlohmann::json::array();
      for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["A"] = dump(model.A);
  j["B"] = dump(model.B);
  j["C"] = dump(model.C);
  return j.dump(2);
}

LinearActuation model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto parse = [](const nlohmann::json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows.at(0).size());
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < c; ++k) M(i, k) = rows.at(i).at(k).get<double>();
    return M;
  };
  LinearActuation model;
  model.A = parse(j.at("A"));
  model.B = parse(j.at("B"));
  model.C = parse(j.at("C"));
  const int m = j.at("m").get<int>();
  const int n = j.at("n").get<int>();
  if (model.A.rows() != m || model.A.cols() != m || model.B.rows() != m ||
      model.B.cols() != n || model.C.rows() != n || model.C.cols() != m)
    throw std::invalid_argument("model_from_json: dimension header mismatch");
  return model;
}

LinearActuation load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void save_model(const LinearActuation& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << to_json(model) << "\n";
}

}  // namespace safeqp::actuation
