#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "priorlab/rng.hpp"

namespace priorlab {

/// One dataset entry as seen by the samplers: an opaque sample id plus its
/// class label.  Ids must be unique within a dataset.
struct LabeledIndex {
  std::int64_t index = 0;
  int class_id = 0;
};

enum class SamplingStrategy {
  UniformRandom,    // batch_size ids without replacement from the whole set
  ClassBalanced,    // many classes per batch, small per-class quota
  ClassImbalanced,  // few classes per batch, large per-class quota
  InverseSqrtFreq,  // class picked with probability proportional to sqrt(count)
};

/**
 * Batch construction parameters.  ClassBalanced and ClassImbalanced share
 * the same mechanics (draw `classes_per_batch` distinct classes, then an
 * equal quota of samples from each); they are distinct strategies because
 * the two regimes are compared against each other.  `classes_per_batch`
 * must divide `batch_size` for both.
 */
struct SamplerConfig {
  SamplingStrategy strategy = SamplingStrategy::UniformRandom;
  int classes_per_batch = 0;  // only read by the class-stratified strategies
  int batch_size = 1;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const SamplerConfig& c);
void from_json(const nlohmann::json& j, SamplerConfig& c);

/**
 * Stateful mini-batch sampler over a labeled dataset.  Each next_batch call
 * is one iteration: class-stratified strategies redraw their class subset
 * every time (sampling is with replacement across batches, without
 * replacement inside a batch).  InverseSqrtFreq draws `batch_size`
 * independent (class, member) pairs, so ids can repeat within its batches.
 *
 * The sample stream is a pure function of (config.seed, iteration order);
 * one instance must not be shared across threads.
 */
class Sampler {
 public:
  Sampler(SamplerConfig config, std::vector<LabeledIndex> dataset);

  /// Ids for the next iteration, exactly config.batch_size of them.  Throws
  /// if a class-stratified draw selects a class smaller than its quota.
  std::vector<std::int64_t> next_batch();

  const SamplerConfig& config() const { return config_; }
  int num_classes() const { return static_cast<int>(by_class_.size()); }

 private:
  SamplerConfig config_;
  std::vector<LabeledIndex> dataset_;
  std::vector<std::vector<int>> by_class_;  // dataset positions per class
  Rng rng_;
};

/// Class-uniform dataset shape used by the closed-form marginals.
struct DatasetShape {
  int num_classes = 0;
  std::int64_t per_class = 0;
};

/**
 * Exact probability that one fixed sample appears in a single batch.
 *
 * UniformRandom: B / (C n).  Class-stratified: (quota * classes_per_batch)
 * / (n C), computed from the integer numerator and denominator so that two
 * strategies with equal batch size produce bit-identical doubles.
 * InverseSqrtFreq: 1 - (1 - 1/(n C))^B; on a class-uniform shape the
 * sqrt-weighted class draw is uniform, and batch draws are independent.
 */
double marginal_probability(SamplingStrategy strategy, DatasetShape shape, int batch_size,
                            int classes_per_batch = 0);

struct MarginalAudit {
  std::vector<double> frequency;  // per dataset position: batches containing it / iterations
  double closed_form = 0.0;
  double max_abs_deviation = 0.0;
  std::int64_t iterations = 0;
};

/**
 * Runs `iterations` batches and counts, per sample, the fraction of batches
 * containing it, against the closed-form marginal.  The dataset must be
 * class-uniform unless the strategy is UniformRandom.  Deterministic in
 * config.seed.
 */
MarginalAudit empirical_marginal_audit(const SamplerConfig& config,
                                       const std::vector<LabeledIndex>& dataset,
                                       std::int64_t iterations);

}  // namespace priorlab
