#include "priorlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "priorlab/rng.hpp"

namespace priorlab {

namespace {

// Distinct Gaussian init per weight matrix, scaled by 1/sqrt(fan_in).
Eigen::MatrixXd random_weights(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

void validate_config(const TrainerConfig& c) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw std::invalid_argument("TrainerConfig: learning_rate must be positive and finite");
  if (!(c.momentum >= 0.0) || !(c.momentum < 1.0))
    throw std::invalid_argument("TrainerConfig: momentum must lie in [0, 1)");
  if (c.steps < 1) throw std::invalid_argument("TrainerConfig: steps must be at least 1");
  if (c.batch_size < 1) throw std::invalid_argument("TrainerConfig: batch_size must be at least 1");
  if (!(c.ema_momentum >= 0.0) || !(c.ema_momentum <= 1.0))
    throw std::invalid_argument("TrainerConfig: ema_momentum must lie in [0, 1]");
}

void renormalize_columns(Eigen::MatrixXd& w) {
  for (int c = 0; c < w.cols(); ++c) {
    const double norm = w.col(c).norm();
    if (norm < 1e-12)
      throw std::logic_error("prototype column " + std::to_string(c) +
                             " collapsed to zero norm");
    w.col(c) /= norm;
  }
}

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& z, const char* what) {
  Eigen::MatrixXd out = z;
  for (int r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm < 1e-12)
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(r) +
                                  " has zero norm");
    out.row(r) /= norm;
  }
  return out;
}

// One velocity buffer per parameter tensor; v = mu v + g, p -= lr v.
struct Velocity {
  Eigen::MatrixXd w1, w2, w;
  Eigen::RowVectorXd b1, b2;
};

void sgd_step(Eigen::MatrixXd& p, Eigen::MatrixXd& v, const Eigen::MatrixXd& g, double lr,
              double mu) {
  v = mu * v + g;
  p -= lr * v;
}

void sgd_step(Eigen::RowVectorXd& p, Eigen::RowVectorXd& v, const Eigen::RowVectorXd& g,
              double lr, double mu) {
  v = mu * v + g;
  p -= lr * v;
}

void ema_update(Encoder& target, const Encoder& online, double m) {
  target.w1 = m * target.w1 + (1.0 - m) * online.w1;
  target.b1 = m * target.b1 + (1.0 - m) * online.b1;
  if (target.kind == EncoderKind::OneHidden) {
    target.w2 = m * target.w2 + (1.0 - m) * online.w2;
    target.b2 = m * target.b2 + (1.0 - m) * online.b2;
  }
}

// Deterministic per-step stream for view generation, decorrelated from the
// sampler's and initializer's seeds.
std::uint64_t view_seed(std::uint64_t base, int step) {
  return base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(step + 1);
}

std::string regularizer_name(MeanRegularizer r) {
  return r == MeanRegularizer::KlToPrior ? "kl_to_prior" : "negative_entropy";
}

MeanRegularizer regularizer_from_name(const std::string& s) {
  if (s == "kl_to_prior") return MeanRegularizer::KlToPrior;
  if (s == "negative_entropy") return MeanRegularizer::NegativeEntropy;
  throw std::invalid_argument("unknown regularizer: " + s);
}

}  // namespace

Eigen::MatrixXd Encoder::forward(const Eigen::MatrixXd& x) const {
  if (x.cols() != w1.rows())
    throw std::invalid_argument("Encoder::forward: input has " + std::to_string(x.cols()) +
                                " columns, encoder expects " + std::to_string(w1.rows()));
  if (kind == EncoderKind::Linear) return (x * w1).rowwise() + b1;
  const Eigen::MatrixXd h = ((x * w1).rowwise() + b1).array().tanh().matrix();
  return (h * w2).rowwise() + b2;
}

EncoderGradients encoder_backward(const Encoder& encoder, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& d_output) {
  if (x.rows() != d_output.rows())
    throw std::invalid_argument("encoder_backward: batch size mismatch");
  EncoderGradients g;
  if (encoder.kind == EncoderKind::Linear) {
    g.w1 = x.transpose() * d_output;
    g.b1 = d_output.colwise().sum();
    return g;
  }
  const Eigen::MatrixXd h = ((x * encoder.w1).rowwise() + encoder.b1).array().tanh().matrix();
  g.w2 = h.transpose() * d_output;
  g.b2 = d_output.colwise().sum();
  const Eigen::MatrixXd d_pre =
      ((d_output * encoder.w2.transpose()).array() * (1.0 - h.array().square())).matrix();
  g.w1 = x.transpose() * d_pre;
  g.b1 = d_pre.colwise().sum();
  return g;
}

SiameseState SiameseState::initialize(int input_dim, int embed_dim, int num_prototypes,
                                      const TrainerConfig& config, std::uint64_t seed,
                                      EncoderKind kind, int hidden_width) {
  if (input_dim < 1 || embed_dim < 1 || num_prototypes < 1)
    throw std::invalid_argument("SiameseState: dimensions must be positive");
  if (kind == EncoderKind::OneHidden && hidden_width < 1)
    throw std::invalid_argument("SiameseState: hidden_width must be positive");
  validate_config(config);

  Rng rng(seed);
  SiameseState state;
  state.config = config;
  state.seed = seed;
  state.encoder.kind = kind;
  if (kind == EncoderKind::Linear) {
    state.encoder.w1 = random_weights(input_dim, embed_dim, rng);
    state.encoder.b1 = Eigen::RowVectorXd::Zero(embed_dim);
  } else {
    state.encoder.w1 = random_weights(input_dim, hidden_width, rng);
    state.encoder.b1 = Eigen::RowVectorXd::Zero(hidden_width);
    state.encoder.w2 = random_weights(hidden_width, embed_dim, rng);
    state.encoder.b2 = Eigen::RowVectorXd::Zero(embed_dim);
  }
  state.target_encoder = state.encoder;
  state.w = random_weights(embed_dim, num_prototypes, rng);
  renormalize_columns(state.w);
  return state;
}

TrainReport train(const SynthDataset& dataset, SiameseState& state,
                  const SamplerConfig& sampler_config) {
  validate_config(state.config);
  if (dataset.dim() != state.encoder.input_dim())
    throw std::invalid_argument("train: dataset dimension " + std::to_string(dataset.dim()) +
                                " does not match encoder input " +
                                std::to_string(state.encoder.input_dim()));

  std::vector<LabeledIndex> labeled;
  labeled.reserve(static_cast<std::size_t>(dataset.size()));
  for (int i = 0; i < dataset.size(); ++i)
    labeled.push_back({static_cast<std::int64_t>(i),
                       dataset.primary_labels[static_cast<std::size_t>(i)]});
  Sampler sampler(sampler_config, std::move(labeled));

  const TrainerConfig& cfg = state.config;
  Velocity vel;
  vel.w1 = Eigen::MatrixXd::Zero(state.encoder.w1.rows(), state.encoder.w1.cols());
  vel.b1 = Eigen::RowVectorXd::Zero(state.encoder.b1.size());
  if (state.encoder.kind == EncoderKind::OneHidden) {
    vel.w2 = Eigen::MatrixXd::Zero(state.encoder.w2.rows(), state.encoder.w2.cols());
    vel.b2 = Eigen::RowVectorXd::Zero(state.encoder.b2.size());
  }
  vel.w = Eigen::MatrixXd::Zero(state.w.rows(), state.w.cols());

  TrainReport report;
  report.loss_series.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    const std::vector<std::int64_t> batch = sampler.next_batch();
    Eigen::MatrixXd xb(static_cast<Eigen::Index>(batch.size()), dataset.dim());
    for (std::size_t r = 0; r < batch.size(); ++r)
      xb.row(static_cast<Eigen::Index>(r)) = dataset.X.row(batch[r]);

    const auto [anchor_view, target_view] =
        make_views(xb, cfg.views, view_seed(state.seed, step));
    const Eigen::MatrixXd z_anchor = state.encoder.forward(anchor_view);
    const Eigen::MatrixXd z_target = state.target_encoder.forward(target_view);

    const PmsnGradients grads =
        pmsn_gradients(z_anchor, z_target, state.w, cfg.loss, cfg.regularizer);
    if (!std::isfinite(grads.loss))
      throw std::runtime_error("training diverged at step " + std::to_string(step) +
                               ": loss is not finite");
    report.loss_series.push_back(grads.loss);

    const EncoderGradients eg = encoder_backward(state.encoder, anchor_view, grads.d_z_anchor);
    sgd_step(state.encoder.w1, vel.w1, eg.w1, cfg.learning_rate, cfg.momentum);
    sgd_step(state.encoder.b1, vel.b1, eg.b1, cfg.learning_rate, cfg.momentum);
    if (state.encoder.kind == EncoderKind::OneHidden) {
      sgd_step(state.encoder.w2, vel.w2, eg.w2, cfg.learning_rate, cfg.momentum);
      sgd_step(state.encoder.b2, vel.b2, eg.b2, cfg.learning_rate, cfg.momentum);
    }
    sgd_step(state.w, vel.w, grads.d_w, cfg.learning_rate, cfg.momentum);
    renormalize_columns(state.w);

    if (cfg.use_ema)
      ema_update(state.target_encoder, state.encoder, cfg.ema_momentum);
    else
      state.target_encoder = state.encoder;
  }

  report.metrics = evaluate(state, dataset);
  return report;
}

double nn_purity(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(embeddings.rows());
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("nn_purity: labels size does not match embeddings");
  if (k < 1 || k >= n)
    throw std::invalid_argument("nn_purity: k must lie in [1, N-1], got " + std::to_string(k) +
                                " for N = " + std::to_string(n));
  const Eigen::MatrixXd zn = normalized_rows(embeddings, "nn_purity");
  const Eigen::MatrixXd sim = zn * zn.transpose();

  double total = 0.0;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      if (sim(i, a) != sim(i, b)) return sim(i, a) > sim(i, b);
      return a < b;
    });
    int same = 0;
    for (int r = 0; r < k; ++r)
      if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] ==
          labels[static_cast<std::size_t>(i)])
        same++;
    total += static_cast<double>(same) / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

TrainMetrics evaluate(const SiameseState& state, const SynthDataset& dataset) {
  const Eigen::MatrixXd z = state.encoder.forward(dataset.X);
  const int n = dataset.size();
  const int k = std::min(5, n - 1);

  TrainMetrics m;
  m.nn_purity_primary = nn_purity(z, dataset.primary_labels, k);
  m.has_secondary = !dataset.secondary_labels.empty();
  m.nn_purity_secondary = m.has_secondary ? nn_purity(z, dataset.secondary_labels, k) : 0.0;

  const Eigen::MatrixXd zn = normalized_rows(z, "evaluate");
  const std::vector<ProbVector> posteriors =
      posterior_from_embeddings(zn, state.w, state.config.loss.sigma);
  const int num_k = state.num_prototypes();
  Eigen::VectorXd pbar_acc = Eigen::VectorXd::Zero(num_k);
  Eigen::VectorXd usage = Eigen::VectorXd::Zero(num_k);
  for (const ProbVector& p : posteriors) {
    int best = 0;
    for (int c = 0; c < num_k; ++c) {
      pbar_acc(c) += p[c];
      if (p[c] > p[best]) best = c;
    }
    usage(best) += 1.0;
  }
  const ProbVector pbar = ProbVector::normalized(pbar_acc);
  m.cluster_usage = ProbVector::normalized(usage);

  const ProbVector prior = build_prior(state.config.loss.prior, num_k);
  if (state.config.loss.prior_alignment == PriorAlignment::SortedDescending) {
    Eigen::VectorXd ps = pbar.values();
    Eigen::VectorXd qs = prior.values();
    std::sort(ps.data(), ps.data() + ps.size(), std::greater<double>());
    std::sort(qs.data(), qs.data() + qs.size(), std::greater<double>());
    m.kl_pbar_to_prior = kl_divergence(ProbVector::normalized(ps), ProbVector::normalized(qs));
  } else {
    m.kl_pbar_to_prior = kl_divergence(pbar, prior);
  }
  return m;
}

void to_json(nlohmann::json& j, const TrainerConfig& c) {
  nlohmann::json views{{"noise_sigma", c.views.noise_sigma},
                       {"mask_fraction", c.views.mask_fraction}};
  j = nlohmann::json{{"loss", c.loss},
                     {"regularizer", regularizer_name(c.regularizer)},
                     {"learning_rate", c.learning_rate},
                     {"momentum", c.momentum},
                     {"steps", c.steps},
                     {"batch_size", c.batch_size},
                     {"ema_momentum", c.ema_momentum},
                     {"use_ema", c.use_ema},
                     {"views", views}};
}

void from_json(const nlohmann::json& j, TrainerConfig& c) {
  c.loss = j.at("loss").get<LossConfig>();
  c.regularizer = regularizer_from_name(j.at("regularizer").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.steps = j.at("steps").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.ema_momentum = j.at("ema_momentum").get<double>();
  c.use_ema = j.at("use_ema").get<bool>();
  c.views.noise_sigma = j.at("views").at("noise_sigma").get<double>();
  c.views.mask_fraction = j.at("views").at("mask_fraction").get<double>();
  validate_config(c);
}

void to_json(nlohmann::json& j, const TrainMetrics& m) {
  std::vector<double> usage(static_cast<std::size_t>(m.cluster_usage.size()));
  for (int i = 0; i < m.cluster_usage.size(); ++i) usage[static_cast<std::size_t>(i)] =
      m.cluster_usage[i];
  j = nlohmann::json{{"nn_purity_primary", m.nn_purity_primary},
                     {"nn_purity_secondary", m.nn_purity_secondary},
                     {"has_secondary", m.has_secondary},
                     {"kl_pbar_to_prior", m.kl_pbar_to_prior},
                     {"cluster_usage", usage}};
}

void to_json(nlohmann::json& j, const TrainReport& r) {
  j = nlohmann::json{{"loss_series", r.loss_series}, {"metrics", r.metrics}};
}

}  // namespace priorlab
