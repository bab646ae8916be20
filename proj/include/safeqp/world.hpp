#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace safeqp {

/// Snapshot of every position and per-agent actuation state. Agents occupy
/// indices 0..n_agents-1; obstacles follow and are stationary.
struct WorldState {
  std::vector<Eigen::VectorXd> positions;
  int n_agents = 0;
  std::vector<Eigen::VectorXd> actuation_states;  // per agent; empty if ideal
  std::vector<Eigen::VectorXd> velocity_refs;     // per agent
  double time = 0.0;

  int n_total() const { return static_cast<int>(positions.size()); }
  int n_obstacles() const { return n_total() - n_agents; }
  int dim() const {
    return positions.empty() ? 0 : static_cast<int>(positions.front().size());
  }

  Eigen::VectorXd relative_position(int i, int j) const {
    return positions.at(i) - positions.at(j);
  }

  double min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_agents; ++i)
      for (int j = 0; j < n_total(); ++j) {
        if (j == i) continue;
        best = std::min(best, (positions[i] - positions[j]).norm());
      }
    return best;
  }
};

}  // namespace safeqp
