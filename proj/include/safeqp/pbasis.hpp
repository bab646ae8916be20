#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace safeqp::pbasis {

/// Fixed constraint-normal matrix used to reshape feasible sets. Rows are
/// unit vectors; any n of them are linearly independent; together they
/// positively span R^n. c_A is the alignment threshold defining the index
/// set J(u) = { j : row_j . u >= c_A }.
struct PositiveBasis {
  Eigen::MatrixXd rows;  // n_p x n, n_p > n
  double c_A = 0.0;
  std::string provenance;  // e.g. "polygon(11)" or "random3d(seed=1)"

  int n_p() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

struct ValidationIssue {
  std::string condition;     // which invariant failed
  Eigen::VectorXd direction; // offending unit direction, when applicable
  std::string detail;
};

struct ValidationReport {
  bool passed = false;
  int samples = 0;
  int min_cardinality = 0;        // min over sampled u of |J(u)|
  double min_alignment = 0.0;     // min over sampled u of max_j row_j.u
  double min_subset_sigma = 0.0;  // smallest sigma_min over all n-row subsets
  std::vector<ValidationIssue> issues;
};

/// Outward normals of a regular odd-sided polygon (n = 2 only):
/// row_j = [cos(2*pi*j/n_p), sin(2*pi*j/n_p)], j = 1..n_p, c_A = cos(2*pi/n_p).
/// Throws std::invalid_argument unless n_p is odd and >= 5.
PositiveBasis polygon_basis(int n_p);

/// Randomized construction for n = 3 (n_p >= 7): a positively spanning seed
/// set is grown with perturbed sphere-covering directions, rejecting any
/// candidate that makes some 3-subset nearly dependent. c_A is set to the
/// largest validating threshold on a dense direction sweep, shrunk by 5%.
/// Throws std::runtime_error if construction fails after bounded retries.
PositiveBasis random_basis_3d(int n_p, unsigned long long seed);

/// Samples unit directions (uniform angles for n = 2, Fibonacci sphere for
/// n = 3) and checks: unit rows, independence of every n-row subset,
/// |J(u)| >= n, and that u lies in the strict positive span of the J(u) rows.
ValidationReport validate_basis(const PositiveBasis& basis, int n_samples);

/// Worst-case inverse-Gram conditioning constant: exact enumeration of
/// max lambda_max^{1/2}((S S')^{-1}) over all nonempty row subsets S with
/// |S| <= n. Requires n_p <= 15.
double compute_c_M(const PositiveBasis& basis);

/// JSON (de)serialization for reproducible configs.
std::string to_json(const PositiveBasis& basis);
PositiveBasis basis_from_json(const std::string& text);
PositiveBasis load_basis(const std::string& path);
void save_basis(const PositiveBasis& basis, const std::string& path);

}  // namespace safeqp::pbasis
