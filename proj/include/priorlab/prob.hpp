#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace priorlab {

// ---------------------------------------------------------------------------
// Probability vectors
// ---------------------------------------------------------------------------

/**
 * Discrete distribution over K >= 1 categories.
 *
 * Construction validates the invariants once (entries >= 0, sum within 1e-12
 * of 1) and the contents are immutable afterwards, so downstream code can
 * take validity for granted.  Vectors that fail the sum check are rejected,
 * never silently renormalized; use `normalized` when renormalization is the
 * intent.
 */
class ProbVector {
 public:
  explicit ProbVector(Eigen::VectorXd p);
  explicit ProbVector(const std::vector<double>& p);

  static ProbVector uniform(int k);
  static ProbVector one_hot(int k, int index);
  /// Builds from nonnegative weights with positive total, dividing by the sum.
  static ProbVector normalized(Eigen::VectorXd weights);

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int k) const { return p_(k); }
  const Eigen::VectorXd& values() const { return p_; }

  bool operator==(const ProbVector& other) const { return p_ == other.p_; }

  /// Maximum tolerated |sum - 1| at construction.
  static constexpr double kSumTolerance = 1e-12;

 private:
  Eigen::VectorXd p_;
};

// ---------------------------------------------------------------------------
// Information measures (natural log; 0 ln 0 = 0)
// ---------------------------------------------------------------------------

/// Shannon entropy H(p) = -sum_k p_k ln p_k, in nats.
double entropy(const ProbVector& p);

/// Cross-entropy H(p, q) = -sum_k p_k ln q_k.  Throws std::domain_error when
/// q_k = 0 at an index where p_k > 0 (the value would be infinite).
double cross_entropy(const ProbVector& p, const ProbVector& q);

/// KL(p || q) = sum_k p_k ln(p_k / q_k).  Same support requirement as
/// cross_entropy.
double kl_divergence(const ProbVector& p, const ProbVector& q);

// ---------------------------------------------------------------------------
// Prior construction
// ---------------------------------------------------------------------------

/**
 * Declarative description of a target class/cluster distribution.
 *
 * Serializes to JSON as one of
 *   {"kind": "uniform"}
 *   {"kind": "power_law", "tau": 0.25}
 *   {"kind": "empirical", "counts": [5, 3, 2]}
 */
struct PriorSpec {
  enum class Kind { Uniform, PowerLaw, Empirical };

  Kind kind = Kind::Uniform;
  double tau = 0.0;                   // PowerLaw decay exponent, > 0
  std::vector<std::int64_t> counts;   // Empirical per-class counts, all >= 1

  static PriorSpec uniform();
  static PriorSpec power_law(double tau);
  static PriorSpec empirical(std::vector<std::int64_t> counts);
};

/**
 * Materializes a PriorSpec over k categories.
 *
 * Uniform: every entry 1/k.  PowerLaw: entry i proportional to (i+1)^-tau,
 * strictly decreasing.  Empirical: counts normalized by their total; the
 * counts vector length must equal k.
 */
ProbVector build_prior(const PriorSpec& spec, int k);

void to_json(nlohmann::json& j, const PriorSpec& spec);
void from_json(const nlohmann::json& j, PriorSpec& spec);

}  // namespace priorlab
