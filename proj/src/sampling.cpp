#include "priorlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace priorlab {

namespace {

bool class_stratified(SamplingStrategy s) {
  return s == SamplingStrategy::ClassBalanced || s == SamplingStrategy::ClassImbalanced;
}

void validate_config(const SamplerConfig& c, int num_classes, std::size_t num_samples) {
  if (c.batch_size < 1) throw std::invalid_argument("Sampler: batch_size must be positive");
  if (c.strategy == SamplingStrategy::UniformRandom &&
      static_cast<std::size_t>(c.batch_size) > num_samples) {
    throw std::invalid_argument("Sampler: batch_size exceeds dataset size");
  }
  if (class_stratified(c.strategy)) {
    if (c.classes_per_batch < 1) {
      throw std::invalid_argument("Sampler: classes_per_batch must be positive");
    }
    if (c.classes_per_batch > num_classes) {
      throw std::invalid_argument("Sampler: classes_per_batch exceeds the number of classes");
    }
    if (c.batch_size % c.classes_per_batch != 0) {
      throw std::invalid_argument("Sampler: batch_size not divisible by classes_per_batch");
    }
  }
}

}  // namespace

Sampler::Sampler(SamplerConfig config, std::vector<LabeledIndex> dataset)
    : config_(config), dataset_(std::move(dataset)), rng_(config.seed) {
  if (dataset_.empty()) throw std::invalid_argument("Sampler: empty dataset");
  int max_class = 0;
  std::unordered_set<std::int64_t> seen;
  seen.reserve(dataset_.size());
  for (const LabeledIndex& item : dataset_) {
    if (item.class_id < 0) throw std::invalid_argument("Sampler: negative class_id");
    max_class = std::max(max_class, item.class_id);
    if (!seen.insert(item.index).second) {
      throw std::invalid_argument("Sampler: duplicate sample id " + std::to_string(item.index));
    }
  }
  by_class_.resize(static_cast<std::size_t>(max_class) + 1);
  for (std::size_t pos = 0; pos < dataset_.size(); ++pos) {
    by_class_[static_cast<std::size_t>(dataset_[pos].class_id)].push_back(static_cast<int>(pos));
  }
  validate_config(config_, num_classes(), dataset_.size());
}

std::vector<std::int64_t> Sampler::next_batch() {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(config_.batch_size));

  switch (config_.strategy) {
    case SamplingStrategy::UniformRandom: {
      for (std::size_t pos : rng_.sample_without_replacement(
               dataset_.size(), static_cast<std::size_t>(config_.batch_size))) {
        out.push_back(dataset_[pos].index);
      }
      break;
    }
    case SamplingStrategy::ClassBalanced:
    case SamplingStrategy::ClassImbalanced: {
      const int quota = config_.batch_size / config_.classes_per_batch;
      const std::vector<std::size_t> classes = rng_.sample_without_replacement(
          by_class_.size(), static_cast<std::size_t>(config_.classes_per_batch));
      for (std::size_t c : classes) {
        const std::vector<int>& members = by_class_[c];
        if (members.size() < static_cast<std::size_t>(quota)) {
          throw std::runtime_error("Sampler: class " + std::to_string(c) + " has " +
                                   std::to_string(members.size()) + " samples, quota is " +
                                   std::to_string(quota));
        }
        for (std::size_t m :
             rng_.sample_without_replacement(members.size(), static_cast<std::size_t>(quota))) {
          out.push_back(dataset_[static_cast<std::size_t>(members[m])].index);
        }
      }
      break;
    }
    case SamplingStrategy::InverseSqrtFreq: {
      std::vector<double> weights(by_class_.size());
      for (std::size_t c = 0; c < by_class_.size(); ++c) {
        weights[c] = std::sqrt(static_cast<double>(by_class_[c].size()));
      }
      for (int b = 0; b < config_.batch_size; ++b) {
        const std::size_t c = rng_.sample_categorical(weights);
        const std::vector<int>& members = by_class_[c];
        const std::size_t m = static_cast<std::size_t>(rng_.uniform_int(members.size()));
        out.push_back(dataset_[static_cast<std::size_t>(members[m])].index);
      }
      break;
    }
  }
  return out;
}

double marginal_probability(SamplingStrategy strategy, DatasetShape shape, int batch_size,
                            int classes_per_batch) {
  if (shape.num_classes < 1 || shape.per_class < 1) {
    throw std::invalid_argument("marginal_probability: empty dataset shape");
  }
  if (batch_size < 1) throw std::invalid_argument("marginal_probability: batch_size must be positive");
  const std::int64_t total = shape.per_class * shape.num_classes;

  switch (strategy) {
    case SamplingStrategy::UniformRandom:
      if (batch_size > total) {
        throw std::invalid_argument("marginal_probability: batch_size exceeds dataset size");
      }
      return static_cast<double>(batch_size) / static_cast<double>(total);
    case SamplingStrategy::ClassBalanced:
    case SamplingStrategy::ClassImbalanced: {
      if (classes_per_batch < 1 || classes_per_batch > shape.num_classes) {
        throw std::invalid_argument("marginal_probability: invalid classes_per_batch");
      }
      if (batch_size % classes_per_batch != 0) {
        throw std::invalid_argument(
            "marginal_probability: batch_size not divisible by classes_per_batch");
      }
      const std::int64_t quota = batch_size / classes_per_batch;
      if (quota > shape.per_class) {
        throw std::invalid_argument("marginal_probability: quota exceeds class size");
      }
      // p(x in batch) = p(class drawn) * p(x | class) = (k/C)(quota/n).
      // One integer division keeps equal-batch-size strategies bit-identical.
      return static_cast<double>(quota * classes_per_batch) / static_cast<double>(total);
    }
    case SamplingStrategy::InverseSqrtFreq: {
      const double per_draw = 1.0 / static_cast<double>(total);
      return 1.0 - std::pow(1.0 - per_draw, static_cast<double>(batch_size));
    }
  }
  throw std::invalid_argument("marginal_probability: unknown strategy");
}

MarginalAudit empirical_marginal_audit(const SamplerConfig& config,
                                       const std::vector<LabeledIndex>& dataset,
                                       std::int64_t iterations) {
  if (iterations < 1) throw std::invalid_argument("empirical_marginal_audit: iterations < 1");
  Sampler sampler(config, dataset);

  std::int64_t per_class = -1;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(sampler.num_classes()), 0);
  for (const LabeledIndex& item : dataset) counts[static_cast<std::size_t>(item.class_id)]++;
  for (std::int64_t c : counts) {
    if (per_class < 0) per_class = c;
    if (c != per_class && config.strategy != SamplingStrategy::UniformRandom) {
      throw std::invalid_argument(
          "empirical_marginal_audit: closed form needs a class-uniform dataset");
    }
  }

  MarginalAudit audit;
  audit.iterations = iterations;
  audit.closed_form =
      config.strategy == SamplingStrategy::UniformRandom
          ? static_cast<double>(config.batch_size) / static_cast<double>(dataset.size())
          : marginal_probability(config.strategy,
                                 DatasetShape{sampler.num_classes(), per_class},
                                 config.batch_size, config.classes_per_batch);

  std::unordered_map<std::int64_t, std::size_t> position;
  position.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) position[dataset[i].index] = i;

  std::vector<std::int64_t> hits(dataset.size(), 0);
  std::vector<std::int64_t> stamp(dataset.size(), -1);
  for (std::int64_t it = 0; it < iterations; ++it) {
    for (std::int64_t id : sampler.next_batch()) {
      const std::size_t pos = position.at(id);
      if (stamp[pos] != it) {  // count presence once even if the id repeats
        stamp[pos] = it;
        hits[pos]++;
      }
    }
  }

  audit.frequency.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    audit.frequency[i] = static_cast<double>(hits[i]) / static_cast<double>(iterations);
    audit.max_abs_deviation =
        std::max(audit.max_abs_deviation, std::abs(audit.frequency[i] - audit.closed_form));
  }
  return audit;
}

namespace {

std::string strategy_name(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::UniformRandom: return "uniform_random";
    case SamplingStrategy::ClassBalanced: return "class_balanced";
    case SamplingStrategy::ClassImbalanced: return "class_imbalanced";
    case SamplingStrategy::InverseSqrtFreq: return "inverse_sqrt_freq";
  }
  throw std::invalid_argument("SamplerConfig: unknown strategy");
}

SamplingStrategy strategy_from_name(const std::string& name) {
  if (name == "uniform_random") return SamplingStrategy::UniformRandom;
  if (name == "class_balanced") return SamplingStrategy::ClassBalanced;
  if (name == "class_imbalanced") return SamplingStrategy::ClassImbalanced;
  if (name == "inverse_sqrt_freq") return SamplingStrategy::InverseSqrtFreq;
  throw std::invalid_argument("SamplerConfig: unknown strategy \"" + name + "\"");
}

}  // namespace

void to_json(nlohmann::json& j, const SamplerConfig& c) {
  j = nlohmann::json{{"strategy", strategy_name(c.strategy)},
                     {"classes_per_batch", c.classes_per_batch},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SamplerConfig& c) {
  c = SamplerConfig{};
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.classes_per_batch = j.value("classes_per_batch", 0);
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.value("seed", std::uint64_t{0});
}

}  // namespace priorlab
