#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "priorlab/losses.hpp"
#include "priorlab/prob.hpp"
#include "priorlab/sampling.hpp"
#include "priorlab/synthdata.hpp"

namespace priorlab {

enum class EncoderKind {
  Linear,     // z = x W1 + b1
  OneHidden,  // z = tanh(x W1 + b1) W2 + b2
};

/**
 * Tiny dense encoder.  OneHidden uses a smooth nonlinearity so finite
 * differences stay clean in gradient checks; Linear exists for the fastest
 * tests.  Weight matrices map row vectors from the left.
 */
struct Encoder {
  EncoderKind kind = EncoderKind::OneHidden;
  Eigen::MatrixXd w1;     // d_in x h (Linear: d_in x d)
  Eigen::RowVectorXd b1;  // h (Linear: d)
  Eigen::MatrixXd w2;     // h x d, empty for Linear
  Eigen::RowVectorXd b2;  // d, empty for Linear

  int input_dim() const { return static_cast<int>(w1.rows()); }
  int embed_dim() const {
    return kind == EncoderKind::Linear ? static_cast<int>(w1.cols())
                                       : static_cast<int>(w2.cols());
  }

  /// N x d_in -> N x d.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

struct EncoderGradients {
  Eigen::MatrixXd w1;
  Eigen::RowVectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::RowVectorXd b2;
};

/// Backpropagates d_output (N x d, gradient at the encoder output) through
/// the encoder evaluated at x.  Recomputes the forward activations.
EncoderGradients encoder_backward(const Encoder& encoder, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& d_output);

/**
 * Loss hyperparameters plus the optimizer knobs of the toy training loop.
 * SGD with momentum, no weight decay, no schedule.  With use_ema the target
 * encoder trails the online one at ema_momentum; without it the target is a
 * plain copy after every step (stop-gradient on shared weights).
 */
struct TrainerConfig {
  LossConfig loss;
  MeanRegularizer regularizer = MeanRegularizer::KlToPrior;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int steps = 200;
  int batch_size = 32;
  double ema_momentum = 0.99;
  bool use_ema = true;
  ViewConfig views;
};

void to_json(nlohmann::json& j, const TrainerConfig& c);
void from_json(const nlohmann::json& j, TrainerConfig& c);

/**
 * Everything the loop mutates: online encoder, its EMA target copy, and the
 * d x K prototype matrix.  Prototype columns are unit norm after
 * initialization and after every optimizer step.
 */
struct SiameseState {
  Encoder encoder;
  Encoder target_encoder;
  Eigen::MatrixXd w;  // d x K, unit columns
  TrainerConfig config;
  std::uint64_t seed = 0;

  int num_prototypes() const { return static_cast<int>(w.cols()); }

  static SiameseState initialize(int input_dim, int embed_dim, int num_prototypes,
                                 const TrainerConfig& config, std::uint64_t seed,
                                 EncoderKind kind = EncoderKind::OneHidden,
                                 int hidden_width = 64);
};

struct TrainMetrics {
  double nn_purity_primary = 0.0;
  double nn_purity_secondary = 0.0;  // 0 when the dataset has no secondary factor
  bool has_secondary = false;
  double kl_pbar_to_prior = 0.0;
  ProbVector cluster_usage = ProbVector::uniform(1);
};

struct TrainReport {
  std::vector<double> loss_series;  // one entry per step, pre-update loss
  TrainMetrics metrics;
};

void to_json(nlohmann::json& j, const TrainMetrics& m);
void to_json(nlohmann::json& j, const TrainReport& r);

/**
 * Runs the loop on `state` in place: sample batch, make views, encode (target
 * view through the target encoder, gradients stopped), exact loss gradients,
 * SGD-with-momentum step, prototype renormalization, EMA update.  Throws
 * std::runtime_error naming the step if the loss turns non-finite.
 */
TrainReport train(const SynthDataset& dataset, SiameseState& state,
                  const SamplerConfig& sampler);

/**
 * Fraction of samples whose k nearest neighbors by cosine similarity (self
 * excluded, ties broken by index) share the sample's label, averaged over
 * samples and neighbors.  Requires 1 <= k < N and nonzero rows.
 */
double nn_purity(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels, int k);

/**
 * Metrics of the current online encoder on the full dataset: 5-NN purity per
 * factor (k shrinks to N-1 on tiny datasets), KL from the mean posterior to
 * the configured prior (rank-aligned when the loss uses sorted alignment),
 * and the argmax cluster-usage histogram.
 */
TrainMetrics evaluate(const SiameseState& state, const SynthDataset& dataset);

}  // namespace priorlab
