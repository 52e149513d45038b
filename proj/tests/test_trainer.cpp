#include "priorlab/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "priorlab/rng.hpp"

using priorlab::Encoder;
using priorlab::EncoderKind;
using priorlab::LossConfig;
using priorlab::MeanRegularizer;
using priorlab::PriorSpec;
using priorlab::SamplerConfig;
using priorlab::SamplingStrategy;
using priorlab::SiameseState;
using priorlab::SynthDataset;
using priorlab::TrainerConfig;
using priorlab::TrainReport;

namespace {

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& f) {
  const double denom = a.norm() + f.norm();
  if (denom == 0.0) return 0.0;
  return (a - f).norm() / denom;
}

// Central finite differences of a scalar function of one parameter matrix.
template <typename Loss>
Eigen::MatrixXd fd_matrix(Eigen::MatrixXd& param, Loss loss, double h = 1e-5) {
  Eigen::MatrixXd g(param.rows(), param.cols());
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    for (Eigen::Index c = 0; c < param.cols(); ++c) {
      const double saved = param(r, c);
      param(r, c) = saved + h;
      const double up = loss();
      param(r, c) = saved - h;
      const double down = loss();
      param(r, c) = saved;
      g(r, c) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

template <typename Loss>
Eigen::RowVectorXd fd_row(Eigen::RowVectorXd& param, Loss loss, double h = 1e-5) {
  Eigen::RowVectorXd g(param.size());
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double saved = param(i);
    param(i) = saved + h;
    const double up = loss();
    param(i) = saved - h;
    const double down = loss();
    param(i) = saved;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

SynthDataset tiny_dataset(Eigen::MatrixXd x, std::vector<int> labels, int num_classes) {
  SynthDataset d;
  d.X = std::move(x);
  d.primary_labels = std::move(labels);
  d.num_primary = num_classes;
  return d;
}

bool encoders_equal(const Encoder& a, const Encoder& b) {
  if ((a.w1.array() != b.w1.array()).any()) return false;
  if ((a.b1.array() != b.b1.array()).any()) return false;
  if (a.kind == EncoderKind::OneHidden) {
    if ((a.w2.array() != b.w2.array()).any()) return false;
    if ((a.b2.array() != b.b2.array()).any()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("encoder backward matches finite differences for both architectures") {
  priorlab::Rng rng(314);
  for (const EncoderKind kind : {EncoderKind::Linear, EncoderKind::OneHidden}) {
    TrainerConfig cfg;
    SiameseState state = SiameseState::initialize(3, 4, 2, cfg, 11, kind, 6);
    Encoder& enc = state.encoder;
    Eigen::MatrixXd x(5, 3);
    Eigen::MatrixXd r(5, 4);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
      for (int j = 0; j < 4; ++j) r(i, j) = rng.normal();
    }
    // Scalar probe: L = sum(forward(x) .* r), so dL/d(output) = r.
    const auto loss = [&]() { return (enc.forward(x).array() * r.array()).sum(); };
    const priorlab::EncoderGradients analytic = priorlab::encoder_backward(enc, x, r);
    CHECK(rel_diff(analytic.w1, fd_matrix(enc.w1, loss)) < 1e-7);
    Eigen::MatrixXd b1 = analytic.b1;
    CHECK(rel_diff(b1, fd_row(enc.b1, loss)) < 1e-7);
    if (kind == EncoderKind::OneHidden) {
      CHECK(rel_diff(analytic.w2, fd_matrix(enc.w2, loss)) < 1e-7);
      Eigen::MatrixXd b2 = analytic.b2;
      CHECK(rel_diff(b2, fd_row(enc.b2, loss)) < 1e-7);
    }
  }
}

TEST_CASE("full pipeline gradient matches finite differences with targets held fixed") {
  priorlab::Rng rng(2718);
  TrainerConfig cfg;
  cfg.loss.sigma = 0.4;
  cfg.loss.sharpen_T = 0.5;
  cfg.loss.lambda = 2.0;
  cfg.loss.prior = PriorSpec::power_law(0.8);
  SiameseState state = SiameseState::initialize(3, 4, 3, cfg, 77, EncoderKind::OneHidden, 6);
  Encoder& enc = state.encoder;

  Eigen::MatrixXd xa(5, 3), xt(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) {
      xa(i, j) = rng.normal();
      xt(i, j) = rng.normal();
    }
  // The target branch runs through the (fixed) target encoder, so the loss
  // below depends on the online weights only through the anchor path.
  const Eigen::MatrixXd z_target = state.target_encoder.forward(xt);
  const auto loss = [&]() {
    return priorlab::pmsn_gradients(enc.forward(xa), z_target, state.w, cfg.loss,
                                    MeanRegularizer::KlToPrior)
        .loss;
  };

  const priorlab::PmsnGradients grads = priorlab::pmsn_gradients(
      enc.forward(xa), z_target, state.w, cfg.loss, MeanRegularizer::KlToPrior);
  const priorlab::EncoderGradients analytic =
      priorlab::encoder_backward(enc, xa, grads.d_z_anchor);

  CHECK(rel_diff(analytic.w1, fd_matrix(enc.w1, loss)) < 1e-5);
  CHECK(rel_diff(analytic.w2, fd_matrix(enc.w2, loss)) < 1e-5);
  Eigen::MatrixXd b1 = analytic.b1;
  Eigen::MatrixXd b2 = analytic.b2;
  CHECK(rel_diff(b1, fd_row(enc.b1, loss)) < 1e-5);
  CHECK(rel_diff(b2, fd_row(enc.b2, loss)) < 1e-5);
}

TEST_CASE("loss decreases monotonically on a fixed batch with frozen targets") {
  const SynthDataset data =
      priorlab::gaussian_mixture(4, PriorSpec::uniform(), 16, 4, 3.0, 0.3, 21);
  TrainerConfig cfg;
  cfg.loss.lambda = 0.0;
  cfg.loss.sigma = 0.5;
  cfg.loss.sharpen_T = 0.5;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.0;
  cfg.steps = 50;
  cfg.batch_size = 16;
  // ema_momentum = 1 pins the target encoder, so each step descends the same
  // smooth objective; with the whole dataset as the batch the objective is
  // also independent of sampling order.
  cfg.use_ema = true;
  cfg.ema_momentum = 1.0;

  SiameseState state = SiameseState::initialize(4, 3, 4, cfg, 9, EncoderKind::OneHidden, 8);
  SamplerConfig sampler;
  sampler.strategy = SamplingStrategy::UniformRandom;
  sampler.batch_size = 16;
  sampler.seed = 3;
  const TrainReport report = priorlab::train(data, state, sampler);
  REQUIRE(report.loss_series.size() == 50);
  for (std::size_t i = 1; i < report.loss_series.size(); ++i)
    CHECK(report.loss_series[i] <= report.loss_series[i - 1] + 1e-12);
  CHECK(report.loss_series.back() < report.loss_series.front());
}

TEST_CASE("a single prototype makes training a no-op with zero loss") {
  const SynthDataset data =
      priorlab::gaussian_mixture(2, PriorSpec::uniform(), 8, 3, 2.0, 0.5, 4);
  TrainerConfig cfg;
  cfg.steps = 12;
  cfg.batch_size = 4;
  SiameseState state = SiameseState::initialize(3, 2, 1, cfg, 33, EncoderKind::OneHidden, 6);
  const Encoder before = state.encoder;
  SamplerConfig sampler;
  sampler.batch_size = 4;
  sampler.seed = 8;
  const TrainReport report = priorlab::train(data, state, sampler);
  for (const double loss : report.loss_series) CHECK(loss == 0.0);
  CHECK(encoders_equal(state.encoder, before));
  CHECK(report.metrics.kl_pbar_to_prior == 0.0);
  CHECK(report.metrics.cluster_usage.size() == 1);
  CHECK(report.metrics.cluster_usage[0] == 1.0);
}

TEST_CASE("seeded training runs are identical") {
  const SynthDataset data = priorlab::two_factor_dataset(
      priorlab::default_primary_factor(), priorlab::default_secondary_factor(), 60, 13);
  TrainerConfig cfg;
  cfg.steps = 10;
  cfg.batch_size = 16;
  cfg.views.noise_sigma = 0.2;
  cfg.views.mask_fraction = 0.1;
  SamplerConfig sampler;
  sampler.batch_size = 16;
  sampler.seed = 5;

  SiameseState a = SiameseState::initialize(32, 8, 10, cfg, 101, EncoderKind::OneHidden, 16);
  SiameseState b = SiameseState::initialize(32, 8, 10, cfg, 101, EncoderKind::OneHidden, 16);
  const TrainReport ra = priorlab::train(data, a, sampler);
  const TrainReport rb = priorlab::train(data, b, sampler);
  CHECK(ra.loss_series == rb.loss_series);
  CHECK(ra.metrics.nn_purity_primary == rb.metrics.nn_purity_primary);
  CHECK(ra.metrics.nn_purity_secondary == rb.metrics.nn_purity_secondary);
  CHECK(ra.metrics.kl_pbar_to_prior == rb.metrics.kl_pbar_to_prior);
  CHECK(ra.metrics.cluster_usage == rb.metrics.cluster_usage);
  CHECK(encoders_equal(a.encoder, b.encoder));
  CHECK((a.w.array() == b.w.array()).all());
}

TEST_CASE("target encoder trails the online one at the EMA rate") {
  const SynthDataset data =
      priorlab::gaussian_mixture(3, PriorSpec::uniform(), 12, 4, 2.0, 0.4, 6);
  TrainerConfig cfg;
  cfg.steps = 1;
  cfg.batch_size = 6;
  cfg.use_ema = true;
  cfg.ema_momentum = 0.99;
  SiameseState state = SiameseState::initialize(4, 3, 3, cfg, 55, EncoderKind::OneHidden, 6);
  const Encoder target_before = state.target_encoder;
  SamplerConfig sampler;
  sampler.batch_size = 6;
  sampler.seed = 2;
  priorlab::train(data, state, sampler);
  const Eigen::MatrixXd expected_w1 = 0.99 * target_before.w1 + 0.01 * state.encoder.w1;
  const Eigen::MatrixXd expected_w2 = 0.99 * target_before.w2 + 0.01 * state.encoder.w2;
  CHECK((state.target_encoder.w1 - expected_w1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((state.target_encoder.w2 - expected_w2).cwiseAbs().maxCoeff() < 1e-12);
  // The online encoder must actually have moved for the check to bite.
  CHECK((state.encoder.w1 - target_before.w1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("prototype columns stay unit norm across training") {
  const SynthDataset data =
      priorlab::gaussian_mixture(3, PriorSpec::power_law(1.0), 30, 4, 2.0, 0.5, 61);
  TrainerConfig cfg;
  cfg.steps = 25;
  cfg.batch_size = 10;
  cfg.learning_rate = 0.2;
  SiameseState state = SiameseState::initialize(4, 3, 5, cfg, 19, EncoderKind::OneHidden, 8);
  SamplerConfig sampler;
  sampler.batch_size = 10;
  sampler.seed = 7;
  priorlab::train(data, state, sampler);
  for (int c = 0; c < state.w.cols(); ++c)
    CHECK(std::abs(state.w.col(c).norm() - 1.0) < 1e-9);
}

TEST_CASE("uniform-prior matching and the entropy regularizer train identically") {
  const SynthDataset data = priorlab::two_factor_dataset(
      priorlab::default_primary_factor(), priorlab::default_secondary_factor(), 80, 29);
  TrainerConfig base;
  base.loss.lambda = 5.0;
  base.loss.prior = PriorSpec::uniform();
  base.steps = 30;
  base.batch_size = 20;
  base.views.noise_sigma = 0.2;

  TrainerConfig entropy_cfg = base;
  entropy_cfg.regularizer = MeanRegularizer::NegativeEntropy;
  TrainerConfig matching_cfg = base;
  matching_cfg.regularizer = MeanRegularizer::KlToPrior;

  SamplerConfig sampler;
  sampler.batch_size = 20;
  sampler.seed = 17;
  SiameseState a = SiameseState::initialize(32, 8, 10, entropy_cfg, 202, EncoderKind::OneHidden, 16);
  SiameseState b = SiameseState::initialize(32, 8, 10, matching_cfg, 202, EncoderKind::OneHidden, 16);
  const TrainReport ra = priorlab::train(data, a, sampler);
  const TrainReport rb = priorlab::train(data, b, sampler);

  // Same gradient path, so the parameter trajectories coincide bit for bit;
  // the losses differ by the constant lambda ln K at every step.
  CHECK(encoders_equal(a.encoder, b.encoder));
  CHECK((a.w.array() == b.w.array()).all());
  const double shift = 5.0 * std::log(10.0);
  for (std::size_t i = 0; i < ra.loss_series.size(); ++i)
    CHECK(std::abs(rb.loss_series[i] - ra.loss_series[i] - shift) < 1e-12);
}

TEST_CASE("training aborts with the step index when the loss saturates to infinity") {
  // Anchor and target branches disagree about the best prototype; at a near
  // zero temperature the anchor posterior underflows to an exact zero right
  // where the sharpened target has its mass, making the cross-entropy infinite.
  SynthDataset data = tiny_dataset((Eigen::MatrixXd(2, 2) << 1, 0, -1, 0).finished(), {0, 1}, 2);
  TrainerConfig cfg;
  cfg.loss.sigma = 1e-6;
  cfg.steps = 3;
  cfg.batch_size = 2;
  cfg.use_ema = true;
  SiameseState state = SiameseState::initialize(2, 2, 2, cfg, 40, EncoderKind::Linear);
  state.encoder.w1 = Eigen::MatrixXd::Identity(2, 2);
  state.encoder.b1 = Eigen::RowVectorXd::Zero(2);
  state.target_encoder.w1 = -Eigen::MatrixXd::Identity(2, 2);
  state.target_encoder.b1 = Eigen::RowVectorXd::Zero(2);
  state.w = Eigen::MatrixXd::Identity(2, 2);
  SamplerConfig sampler;
  sampler.batch_size = 2;
  sampler.seed = 1;
  CHECK_THROWS_WITH_AS(priorlab::train(data, state, sampler),
                       doctest::Contains("diverged at step 0"), std::runtime_error);
}

TEST_CASE("nearest-neighbor purity on separable and degenerate inputs") {
  // One-hot embeddings grouped by label: every neighbor list stays in-class.
  Eigen::MatrixXd z(6, 3);
  z.setZero();
  std::vector<int> labels = {0, 0, 1, 1, 2, 2};
  for (int i = 0; i < 6; ++i) z(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  CHECK(priorlab::nn_purity(z, labels, 1) == 1.0);

  // Duplicated points with equal labels.
  Eigen::MatrixXd dup(4, 2);
  dup << 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(priorlab::nn_purity(dup, {3, 3, 4, 4}, 1) == 1.0);

  CHECK_THROWS_AS(priorlab::nn_purity(z, labels, 6), std::invalid_argument);
  CHECK_THROWS_AS(priorlab::nn_purity(z, labels, 0), std::invalid_argument);
  CHECK_THROWS_AS(priorlab::nn_purity(z, {0, 1}, 1), std::invalid_argument);
}

TEST_CASE("purity of label-independent embeddings matches the collision baseline") {
  // Labels with counts (30, 15, 5); for embeddings independent of labels the
  // expected purity is sum_c n_c (n_c - 1) / (N (N - 1)).
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(0);
  for (int i = 0; i < 15; ++i) labels.push_back(1);
  for (int i = 0; i < 5; ++i) labels.push_back(2);
  const double expected = (30.0 * 29 + 15.0 * 14 + 5.0 * 4) / (50.0 * 49);

  const int trials = 60;
  std::vector<double> purities;
  priorlab::Rng rng(1234);
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd z(50, 6);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 6; ++j) z(i, j) = rng.normal();
    purities.push_back(priorlab::nn_purity(z, labels, 5));
  }
  double mean = 0.0;
  for (const double p : purities) mean += p;
  mean /= trials;
  double var = 0.0;
  for (const double p : purities) var += (p - mean) * (p - mean);
  var /= (trials - 1);
  const double se = std::sqrt(var / trials);
  CHECK(std::abs(mean - expected) < 4.0 * se + 1e-3);
}

TEST_CASE("evaluation reports finite metrics and a normalized usage histogram") {
  const SynthDataset data = priorlab::two_factor_dataset(
      priorlab::default_primary_factor(), priorlab::default_secondary_factor(), 120, 41);
  TrainerConfig cfg;
  cfg.loss.prior = PriorSpec::power_law(0.5);
  SiameseState state = SiameseState::initialize(32, 8, 10, cfg, 71, EncoderKind::OneHidden, 16);
  const priorlab::TrainMetrics m = priorlab::evaluate(state, data);
  CHECK(std::isfinite(m.nn_purity_primary));
  CHECK(std::isfinite(m.nn_purity_secondary));
  CHECK(std::isfinite(m.kl_pbar_to_prior));
  CHECK(m.kl_pbar_to_prior >= 0.0);
  CHECK(m.has_secondary);
  double total = 0.0;
  for (int c = 0; c < m.cluster_usage.size(); ++c) total += m.cluster_usage[c];
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.nn_purity_primary >= 0.0);
  CHECK(m.nn_purity_primary <= 1.0);
}

TEST_CASE("trainer config survives a json round trip and rejects bad values") {
  TrainerConfig cfg;
  cfg.loss.lambda = 5.0;
  cfg.loss.prior = PriorSpec::power_law(0.5);
  cfg.regularizer = MeanRegularizer::NegativeEntropy;
  cfg.learning_rate = 0.07;
  cfg.momentum = 0.8;
  cfg.steps = 321;
  cfg.batch_size = 48;
  cfg.ema_momentum = 0.95;
  cfg.use_ema = false;
  cfg.views.noise_sigma = 0.25;
  cfg.views.mask_fraction = 0.15;

  const nlohmann::json j = cfg;
  const TrainerConfig back = j.get<TrainerConfig>();
  CHECK(back.loss.lambda == cfg.loss.lambda);
  CHECK(back.regularizer == cfg.regularizer);
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.momentum == cfg.momentum);
  CHECK(back.steps == cfg.steps);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.ema_momentum == cfg.ema_momentum);
  CHECK(back.use_ema == cfg.use_ema);
  CHECK(back.views.noise_sigma == cfg.views.noise_sigma);
  CHECK(back.views.mask_fraction == cfg.views.mask_fraction);

  nlohmann::json bad = cfg;
  bad["learning_rate"] = 0.0;
  CHECK_THROWS_AS(bad.get<TrainerConfig>(), std::invalid_argument);
  nlohmann::json bad2 = cfg;
  bad2["regularizer"] = "something_else";
  CHECK_THROWS_AS(bad2.get<TrainerConfig>(), std::invalid_argument);
}

TEST_CASE("mismatched dataset and encoder dimensions are rejected") {
  const SynthDataset data =
      priorlab::gaussian_mixture(2, PriorSpec::uniform(), 10, 3, 2.0, 0.4, 2);
  TrainerConfig cfg;
  SiameseState state = SiameseState::initialize(5, 2, 2, cfg, 1, EncoderKind::Linear);
  SamplerConfig sampler;
  sampler.batch_size = 4;
  CHECK_THROWS_AS(priorlab::train(data, state, sampler), std::invalid_argument);
}
