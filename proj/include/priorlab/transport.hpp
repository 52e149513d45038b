#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "priorlab/clustering.hpp"

namespace priorlab {

/**
 * K x N soft cluster assignment.  Column n is the assignment distribution of
 * sample n: entries nonnegative, each column summing to 1 within 1e-9.
 */
class SoftAssignment {
 public:
  explicit SoftAssignment(Eigen::MatrixXd p);

  int num_clusters() const { return static_cast<int>(p_.rows()); }
  int num_samples() const { return static_cast<int>(p_.cols()); }
  const Eigen::MatrixXd& matrix() const { return p_; }

  static constexpr double kColumnTolerance = 1e-9;

 private:
  Eigen::MatrixXd p_;
};

/// Thrown when an iterative solver stops above its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

struct SinkhornOptions {
  double tol = 1e-8;    // max constraint violation accepted as converged
  int max_iter = 1000;  // full row+column sweeps
};

struct SinkhornResult {
  SoftAssignment assignment;
  int iterations;
  double residual;
};

/**
 * Alternating row/column scaling onto the equipartition transport polytope:
 * every row of the K x N output sums to N/K and every column sums to 1.
 *
 * Input entries must be strictly positive; positivity is preserved, so the
 * output has full support.  Entries below 1e-30 switch the solver to
 * log-domain scaling to avoid underflow.  Residual is the largest violation
 * across both constraint families; failure to reach `tol` within `max_iter`
 * sweeps raises ConvergenceError carrying the final residual.
 */
SinkhornResult sinkhorn_project(const Eigen::MatrixXd& raw, const SinkhornOptions& opts = {});

/**
 * Explicit K-means objective restricted to partitions with prescribed
 * cluster cardinalities.  The partition must match `cardinalities` exactly;
 * a mismatch throws with the offending cluster named.
 */
double constrained_kmeans_objective(const Eigen::MatrixXd& X, const Partition& p,
                                    const std::vector<int>& cardinalities);

/**
 * Swapped-prediction loss: the raw target scores are Sinkhorn-projected,
 * and the result is scored against the anchor predictions by mean columnwise
 * cross-entropy (1/N) sum_n H(q_n, p_n), q the projected target.
 */
double swav_loss(const SoftAssignment& anchor, const Eigen::MatrixXd& target_raw,
                 const SinkhornOptions& opts = {});

/**
 * Greedy confidence-ordered rounding of a soft assignment to a hard
 * partition with exactly N/K members per cluster (N must be divisible
 * by K).  Deterministic: cells are visited by descending probability with
 * (sample, cluster) index tie-breaking.
 */
Partition round_to_balanced_partition(const SoftAssignment& p);

}  // namespace priorlab
