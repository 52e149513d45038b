#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "priorlab/rng.hpp"

namespace priorlab {

// Data matrices are row-major in meaning: one sample per row.

/**
 * Hard assignment of N points to K clusters.  Values live in [0, K); empty
 * clusters are allowed.
 */
class Partition {
 public:
  Partition(std::vector<int> assignment, int num_clusters);

  int size() const { return static_cast<int>(assign_.size()); }
  int num_clusters() const { return k_; }
  int operator[](int i) const { return assign_[i]; }
  const std::vector<int>& assignment() const { return assign_; }

  /// Per-cluster point counts, length K.
  std::vector<int> counts() const;

 private:
  std::vector<int> assign_;
  int k_;
};

/// Mean of each non-empty cluster, K x d.  Throws when a cluster is empty.
Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& X, const Partition& p);

/**
 * Sum of squared distances from each point to its cluster mean:
 *   sum_k sum_{x in X_k} ||x - mu_k||^2.
 * Empty clusters contribute zero.
 */
double explicit_kmeans_objective(const Eigen::MatrixXd& X, const Partition& p);

/**
 * Centroid-free form: per cluster, the sum of squared distances over all
 * ordered within-cluster pairs, divided by twice the cluster size.  The
 * diagonal pairs (x, x) contribute zero; a singleton cluster scores zero.
 * Computed definitionally (quadratic pair loop), deliberately not through
 * cluster means, so it can serve as an independent cross-check of the
 * explicit form.
 */
double implicit_kmeans_objective(const Eigen::MatrixXd& X, const Partition& p);

enum class KmeansMode { Explicit, Implicit };

using ClusterObjectiveFn = std::function<double(const Eigen::MatrixXd&, const Partition&)>;

struct BruteForceResult {
  Partition partition;
  double objective;
  std::uint64_t enumerated;  // number of assignments scored
};

/**
 * Exact global optimum by exhaustive enumeration of all K^N assignments.
 *
 * Guarded by `cap` (default 4e6 assignments); larger instances are rejected
 * up front.  Ties resolve to the lexicographically smallest assignment, so
 * the result is deterministic, including under internal threading (see
 * PRIOR_LAB_THREADS).  `objective_override` substitutes a custom scoring
 * function; used by fault-injection tests.
 */
BruteForceResult brute_force_optimum(const Eigen::MatrixXd& X, int k, KmeansMode mode,
                                     std::uint64_t cap = 4000000,
                                     const ClusterObjectiveFn& objective_override = nullptr);

enum class LloydInit {
  KMeansPlusPlus,  // D^2-weighted seeding, randomized
  FirstK,          // first K data points, deterministic
};

struct LloydOptions {
  LloydInit init = LloydInit::KMeansPlusPlus;
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-10;  // stop when the objective improves by less than this
  int restarts = 1;    // best objective over repeated runs (KMeansPlusPlus only)
};

struct LloydResult {
  Eigen::MatrixXd centroids;  // K x d
  Partition partition;
  double objective;
  int iterations;
  /// Objective after every update step, for monotonicity checks.
  std::vector<double> trace;
};

/**
 * Lloyd iteration: alternate nearest-centroid assignment (ties to the lowest
 * cluster index) and mean updates until the objective stalls.  A cluster that
 * empties is re-seeded at the point farthest from its current centroid.
 */
LloydResult lloyd(const Eigen::MatrixXd& X, int k, const LloydOptions& opts = {});

/// Lloyd with caller-supplied initial centroids (K x d).
LloydResult lloyd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& init_centroids,
                  int max_iter = 100, double tol = 1e-10);

/**
 * Adjusted Rand index between two labelings of the same points.  1 for
 * identical partitions (up to relabeling), ~0 for independent ones.  Pairs
 * of trivial partitions with zero index variance score 1 by convention.
 */
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace priorlab
