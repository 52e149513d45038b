#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "priorlab/clustering.hpp"

namespace priorlab {

/**
 * Scale knobs for the verification suites.  `trials` is the base instance
 * count; individual checks run at small fixed multiples of it (documented on
 * each check).  Brute-force instances stay within the enumeration cap, so
 * max_points and max_clusters are bounded.
 */
struct PropsConfig {
  int max_points = 8;    // brute-force instances draw 4..max_points samples
  int max_clusters = 3;  // and 2..max_clusters clusters
  int trials = 100;
  std::uint64_t seed = 20240501;

  /// Throws std::invalid_argument outside trials in [1, 10000],
  /// max_points in [4, 10], max_clusters in [2, 4].
  void validate() const;
};

void to_json(nlohmann::json& j, const PropsConfig& c);
void from_json(const nlohmann::json& j, PropsConfig& c);

/**
 * Outcome of one verification check or suite.  `worst_residual` is the
 * largest residual observed, in the check's own units; `failures` holds one
 * human-readable line per violated bound (empty means passed).
 */
struct SuiteReport {
  std::string name;
  bool passed = false;
  int checks = 0;
  double worst_residual = 0.0;
  std::vector<std::string> failures;
};

void to_json(nlohmann::json& j, const SuiteReport& r);

/// Folds `part` into `into` (counts, worst residual, prefixed failures).
void merge_report(SuiteReport& into, const SuiteReport& part);

// ---------------------------------------------------------------------------
// Individual checks.  Each is deterministic in cfg.seed.
// ---------------------------------------------------------------------------

/**
 * Exhaustive optima of the centroid-based and the pairwise-distance
 * clustering objectives coincide within 1e-9 on `trials` random planar
 * instances, and each optimizer's partition attains the other's optimum.
 * `pairwise_override` replaces the pairwise objective; fault-injection
 * tests use it to prove the check can fail.
 */
SuiteReport check_bruteforce_equivalence(const PropsConfig& cfg,
                                         const ClusterObjectiveFn& pairwise_override = nullptr);

/**
 * Value identity between the two clustering objectives on 2 * trials random
 * (data, partition) pairs, relative error < 1e-12.  The same override hook
 * as above applies.
 */
SuiteReport check_objective_identity(const PropsConfig& cfg,
                                     const ClusterObjectiveFn& pairwise_override = nullptr);

/**
 * Covariance decomposition of centered paired embeddings: the split into
 * within-pair and between-pair parts reconstructs the covariance, and the
 * pairwise-distance trace identity closes, residuals < 1e-10 on `trials`
 * random instances.
 */
SuiteReport check_covariance_split(const PropsConfig& cfg);

/**
 * Soft-assignment posterior equals an independently coded Bayes quotient,
 * max absolute error < 1e-10 over 5 * trials random models and points.
 */
SuiteReport check_posterior_bayes(const PropsConfig& cfg);

/**
 * Small-temperature limit on the frozen four-point fixture {-1 x3, +1 x1}:
 * sigma * loss(lambda / sigma) approaches the hard-assignment limit
 * monotonically over sigma = 1 -> 0.001, lands within 1e-3, and the limit
 * value for the uniform prior at lambda = 1 is 0.130812 within 1e-6.
 */
SuiteReport check_sharp_limit(const PropsConfig& cfg);

/**
 * Doubly-constrained projection feasibility: row sums N/K and column sums 1
 * within 1e-8 in at most 1000 sweeps on `trials` random positive matrices
 * (K <= 8, N <= 64), and idempotence on already-feasible matrices within
 * 1e-8.
 */
SuiteReport check_projection_feasibility(const PropsConfig& cfg);

// ---------------------------------------------------------------------------
// Suites: the four groups reported by the verification front end.
// ---------------------------------------------------------------------------

/// Brute-force equivalence + objective identity.
SuiteReport run_clustering_suite(const PropsConfig& cfg,
                                 const ClusterObjectiveFn& pairwise_override = nullptr);
/// Covariance decomposition and trace identity.
SuiteReport run_covariance_suite(const PropsConfig& cfg);
/// Posterior-vs-Bayes and the sharp-assignment limit.
SuiteReport run_mixture_suite(const PropsConfig& cfg);
/// Projection feasibility and idempotence.
SuiteReport run_transport_suite(const PropsConfig& cfg);

/// All four suites in the order above.  Validates cfg first.
std::vector<SuiteReport> run_all_suites(const PropsConfig& cfg);

}  // namespace priorlab
