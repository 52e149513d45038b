#include "priorlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "priorlab/util.hpp"

namespace priorlab {

SimilarityMatrix::SimilarityMatrix(Eigen::MatrixXd g) : g_(std::move(g)) {
  if (g_.rows() < 1 || g_.rows() != g_.cols()) {
    throw std::invalid_argument("SimilarityMatrix: must be square and nonempty");
  }
  for (Eigen::Index i = 0; i < g_.rows(); ++i) {
    if (g_(i, i) != 0.0) {
      throw std::invalid_argument("SimilarityMatrix: nonzero diagonal at " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < g_.cols(); ++j) {
      if (g_(i, j) != 0.0 && g_(i, j) != 1.0) {
        throw std::invalid_argument("SimilarityMatrix: entry (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") is not 0 or 1");
      }
      if (g_(i, j) != g_(j, i)) {
        throw std::invalid_argument("SimilarityMatrix: not symmetric at (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
      }
    }
  }
}

bool SimilarityMatrix::single_positive() const {
  for (Eigen::Index i = 0; i < g_.rows(); ++i) {
    if (g_.row(i).sum() != 1.0) return false;
  }
  return true;
}

SimilarityMatrix paired_view_graph(int pairs) {
  if (pairs < 1) throw std::invalid_argument("paired_view_graph: need at least one pair");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * pairs, 2 * pairs);
  for (int i = 0; i < pairs; ++i) {
    g(i, i + pairs) = 1.0;
    g(i + pairs, i) = 1.0;
  }
  return SimilarityMatrix(std::move(g));
}

double vicreg_simplified(const Eigen::MatrixXd& Z, const SimilarityMatrix& G, double alpha,
                         double gamma) {
  const int n = static_cast<int>(Z.rows());
  if (n < 2) throw std::invalid_argument("vicreg_simplified: need at least two samples");
  if (G.size() != n) throw std::invalid_argument("vicreg_simplified: graph size != N");

  const Eigen::MatrixXd centered = Z.rowwise() - Z.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  const double cov_term =
      (cov - Eigen::MatrixXd::Identity(Z.cols(), Z.cols())).squaredNorm();

  double invariance = 0.0;
  const Eigen::MatrixXd& g = G.matrix();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g(i, j) != 0.0) invariance += (Z.row(i) - Z.row(j)).squaredNorm();
    }
  }
  return alpha * cov_term + gamma * invariance / static_cast<double>(n);
}

CovarianceSplit covariance_decomposition_check(const Eigen::MatrixXd& Z,
                                               const SimilarityMatrix& G) {
  const int n = static_cast<int>(Z.rows());
  if (G.size() != n) throw std::invalid_argument("covariance_decomposition_check: graph size != N");
  if (!G.single_positive()) {
    throw std::invalid_argument(
        "covariance_decomposition_check: every sample needs exactly one positive");
  }
  const Eigen::VectorXd col_means = Z.colwise().mean();
  if (col_means.cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("covariance_decomposition_check: Z is not column-centered");
  }

  const double nn = static_cast<double>(n);
  const Eigen::MatrixXd& g = G.matrix();
  CovarianceSplit out;
  out.between = Z.transpose() * g * Z / nn;
  out.within = Z.transpose() * (Eigen::MatrixXd::Identity(n, n) - g) * Z / nn;
  const Eigen::MatrixXd cov = Z.transpose() * Z / nn;
  out.cov_residual = (cov - (out.between + out.within)).norm();

  double pair_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g(i, j) != 0.0) pair_sum += (Z.row(i) - Z.row(j)).squaredNorm();
    }
  }
  const double trace_form = 2.0 * (nn * out.within).trace();
  out.pairwise_residual = std::abs(pair_sum - trace_form);
  return out;
}

PosteriorBatch::PosteriorBatch(std::vector<ProbVector> anchors_, std::vector<ProbVector> targets_)
    : anchors(std::move(anchors_)), targets(std::move(targets_)) {
  if (anchors.empty() || anchors.size() != targets.size()) {
    throw std::invalid_argument("PosteriorBatch: anchors/targets must be nonempty, equal length");
  }
  const int k = anchors.front().size();
  for (const auto& bucket : {std::cref(anchors), std::cref(targets)}) {
    for (const ProbVector& p : bucket.get()) {
      if (p.size() != k) throw std::invalid_argument("PosteriorBatch: inconsistent cluster count");
    }
  }
}

ProbVector PosteriorBatch::mean_anchor() const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(num_clusters());
  for (const ProbVector& p : anchors) sum += p.values();
  return ProbVector::normalized(std::move(sum));
}

namespace {

double mean_cross_entropy(const PosteriorBatch& batch) {
  double ce = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    ce += cross_entropy(batch.targets[i], batch.anchors[i]);
  }
  ce /= static_cast<double>(batch.size());
  if (!(ce >= 0.0)) {
    throw std::logic_error("posterior loss: cross-entropy term is negative");
  }
  return ce;
}

// Prior vector rearranged according to the alignment rule: under
// SortedDescending, the r-th largest prior entry faces the r-th largest
// entry of pbar.  Ties break toward the lower index (stable order).
Eigen::VectorXd align_prior(const ProbVector& pbar, const ProbVector& prior,
                            PriorAlignment alignment) {
  if (alignment == PriorAlignment::FixedIndex) return prior.values();
  const int k = pbar.size();
  std::vector<int> by_pbar(k), by_prior(k);
  std::iota(by_pbar.begin(), by_pbar.end(), 0);
  std::iota(by_prior.begin(), by_prior.end(), 0);
  std::stable_sort(by_pbar.begin(), by_pbar.end(),
                   [&](int a, int b) { return pbar[a] > pbar[b]; });
  std::stable_sort(by_prior.begin(), by_prior.end(),
                   [&](int a, int b) { return prior[a] > prior[b]; });
  Eigen::VectorXd out(k);
  for (int r = 0; r < k; ++r) out(by_pbar[r]) = prior[by_prior[r]];
  return out;
}

double kl_to_aligned(const ProbVector& pbar, const Eigen::VectorXd& prior_aligned) {
  double kl = 0.0;
  for (int i = 0; i < pbar.size(); ++i) {
    if (pbar[i] > 0.0) {
      if (prior_aligned(i) <= 0.0) {
        throw std::domain_error("pmsn_loss: prior has zero mass at cluster " + std::to_string(i) +
                                " where the batch mean is positive");
      }
      kl += pbar[i] * (std::log(pbar[i]) - std::log(prior_aligned(i)));
    }
  }
  if (kl < -1e-12) {
    throw std::logic_error("posterior loss: KL term is negative beyond rounding");
  }
  return kl;
}

}  // namespace

double msn_loss(const PosteriorBatch& batch, double lambda) {
  return mean_cross_entropy(batch) - lambda * entropy(batch.mean_anchor());
}

double pmsn_loss(const PosteriorBatch& batch, double lambda, const ProbVector& prior,
                 PriorAlignment alignment) {
  if (prior.size() != batch.num_clusters()) {
    throw std::invalid_argument("pmsn_loss: prior length != cluster count");
  }
  const ProbVector pbar = batch.mean_anchor();
  const double kl = kl_to_aligned(pbar, align_prior(pbar, prior, alignment));
  return mean_cross_entropy(batch) + lambda * kl;
}

namespace {

constexpr double kUnitNormTol = 1e-9;

void check_unit_rows(const Eigen::MatrixXd& Z) {
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    if (std::abs(Z.row(i).norm() - 1.0) > kUnitNormTol) {
      throw std::invalid_argument("posterior_from_embeddings: row " + std::to_string(i) +
                                  " of Z is not unit norm");
    }
  }
}

void check_unit_cols(const Eigen::MatrixXd& W) {
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    if (std::abs(W.col(c).norm() - 1.0) > kUnitNormTol) {
      throw std::invalid_argument("posterior_from_embeddings: column " + std::to_string(c) +
                                  " of W is not unit norm");
    }
  }
}

}  // namespace

std::vector<ProbVector> posterior_from_embeddings(const Eigen::MatrixXd& Z,
                                                  const Eigen::MatrixXd& W, double sigma) {
  if (Z.cols() != W.rows()) {
    throw std::invalid_argument("posterior_from_embeddings: dimension mismatch");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("posterior_from_embeddings: sigma must be > 0");
  check_unit_rows(Z);
  check_unit_cols(W);
  const Eigen::MatrixXd logits = Z * W / sigma;
  std::vector<ProbVector> out;
  out.reserve(static_cast<std::size_t>(Z.rows()));
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    out.push_back(ProbVector(softmax(logits.row(i).transpose())));
  }
  return out;
}

ProbVector sharpen(const ProbVector& p, double T) {
  if (!(T > 0.0) || T > 1.0) {
    throw std::invalid_argument("sharpen: T must lie in (0, 1]");
  }
  Eigen::VectorXd w(p.size());
  const double inv_t = 1.0 / T;
  for (int i = 0; i < p.size(); ++i) w(i) = std::pow(p[i], inv_t);
  return ProbVector::normalized(std::move(w));
}

namespace {

// Rows normalized to unit length; throws on (near-)zero rows.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& Z, Eigen::VectorXd& norms,
                               const char* who) {
  Eigen::MatrixXd out(Z.rows(), Z.cols());
  norms.resize(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double r = Z.row(i).norm();
    if (r < 1e-12) {
      throw std::invalid_argument(std::string(who) + ": row " + std::to_string(i) +
                                  " has (near-)zero norm, cannot normalize");
    }
    norms(i) = r;
    out.row(i) = Z.row(i) / r;
  }
  return out;
}

}  // namespace

PmsnGradients pmsn_gradients(const Eigen::MatrixXd& Z_anchor, const Eigen::MatrixXd& Z_target,
                             const Eigen::MatrixXd& W, const LossConfig& config,
                             MeanRegularizer regularizer) {
  const int n = static_cast<int>(Z_anchor.rows());
  const int d = static_cast<int>(Z_anchor.cols());
  const int k = static_cast<int>(W.cols());
  if (Z_target.rows() != n || Z_target.cols() != d) {
    throw std::invalid_argument("pmsn_gradients: anchor/target shapes differ");
  }
  if (W.rows() != d) throw std::invalid_argument("pmsn_gradients: W rows != embedding dim");
  if (n < 1 || k < 1) throw std::invalid_argument("pmsn_gradients: empty batch or no prototypes");
  if (!(config.sigma > 0.0)) throw std::invalid_argument("pmsn_gradients: sigma must be > 0");
  if (!(config.lambda >= 0.0)) throw std::invalid_argument("pmsn_gradients: lambda must be >= 0");

  Eigen::VectorXd anchor_norms, target_norms;
  const Eigen::MatrixXd Za = normalize_rows(Z_anchor, anchor_norms, "pmsn_gradients(anchor)");
  const Eigen::MatrixXd Zt = normalize_rows(Z_target, target_norms, "pmsn_gradients(target)");
  Eigen::MatrixXd Wn(d, k);
  Eigen::VectorXd w_norms(k);
  for (int c = 0; c < k; ++c) {
    const double r = W.col(c).norm();
    if (r < 1e-12) {
      throw std::invalid_argument("pmsn_gradients: prototype column " + std::to_string(c) +
                                  " has (near-)zero norm");
    }
    w_norms(c) = r;
    Wn.col(c) = W.col(c) / r;
  }

  // Forward pass.  Targets go through the same prototypes but are constants.
  const Eigen::MatrixXd logits_a = Za * Wn / config.sigma;
  const Eigen::MatrixXd logits_t = Zt * Wn / config.sigma;
  Eigen::MatrixXd P(n, k), Q(n, k);
  for (int i = 0; i < n; ++i) {
    P.row(i) = softmax(logits_a.row(i).transpose()).transpose();
    Q.row(i) = sharpen(ProbVector(softmax(logits_t.row(i).transpose())), config.sharpen_T)
                   .values()
                   .transpose();
  }
  const ProbVector pbar = ProbVector::normalized(P.colwise().sum().transpose());

  // Both regularizers share the KL-form gradient:  d/dpbar (-H) and
  // d/dpbar KL(.||uniform) agree on the softmax tangent space, so the
  // uniform-prior runs of the two forms produce identical updates.
  const ProbVector prior = build_prior(
      regularizer == MeanRegularizer::NegativeEntropy ? PriorSpec::uniform() : config.prior, k);
  const Eigen::VectorXd prior_aligned = align_prior(pbar, prior, config.prior_alignment);
  Eigen::VectorXd g(k);
  for (int c = 0; c < k; ++c) {
    if (prior_aligned(c) <= 0.0) {
      throw std::domain_error("pmsn_gradients: prior has zero mass at cluster " +
                              std::to_string(c));
    }
    g(c) = std::log(pbar[c]) - std::log(prior_aligned(c));
  }

  // Loss value.
  double ce = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      if (Q(i, c) > 0.0) ce -= Q(i, c) * std::log(P(i, c));
    }
  }
  ce /= static_cast<double>(n);
  double reg;
  if (regularizer == MeanRegularizer::KlToPrior) {
    reg = kl_to_aligned(pbar, prior_aligned);
  } else {
    reg = -entropy(pbar);
  }
  const double loss = ce + config.lambda * reg;

  // Backward pass through the anchor logits only.
  Eigen::MatrixXd dA(n, k);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd p = P.row(i).transpose();
    const double pg = p.dot(g);
    dA.row(i) = ((p - Q.row(i).transpose()) + config.lambda * (p.array() * g.array()).matrix() -
                 config.lambda * pg * p)
                    .transpose() /
                static_cast<double>(n);
  }

  const Eigen::MatrixXd dZa_hat = dA * Wn.transpose() / config.sigma;
  const Eigen::MatrixXd dW_hat = Za.transpose() * dA / config.sigma;

  // Pull back through the normalizations.
  PmsnGradients out{loss, Eigen::MatrixXd(n, d), Eigen::MatrixXd(d, k)};
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd zi = Za.row(i).transpose();
    const Eigen::VectorXd gi = dZa_hat.row(i).transpose();
    out.d_z_anchor.row(i) = ((gi - zi.dot(gi) * zi) / anchor_norms(i)).transpose();
  }
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd wc = Wn.col(c);
    const Eigen::VectorXd gc = dW_hat.col(c);
    out.d_w.col(c) = (gc - wc.dot(gc) * wc) / w_norms(c);
  }
  return out;
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = nlohmann::json{
      {"lambda", c.lambda},
      {"alpha", c.alpha},
      {"gamma", c.gamma},
      {"sigma", c.sigma},
      {"sharpen_t", c.sharpen_T},
      {"prior", c.prior},
      {"prior_alignment",
       c.prior_alignment == PriorAlignment::FixedIndex ? "fixed_index" : "sorted_descending"},
  };
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  c.lambda = j.value("lambda", c.lambda);
  c.alpha = j.value("alpha", c.alpha);
  c.gamma = j.value("gamma", c.gamma);
  c.sigma = j.value("sigma", c.sigma);
  c.sharpen_T = j.value("sharpen_t", c.sharpen_T);
  if (j.contains("prior")) c.prior = j.at("prior").get<PriorSpec>();
  const std::string alignment = j.value("prior_alignment", std::string("fixed_index"));
  if (alignment == "fixed_index") {
    c.prior_alignment = PriorAlignment::FixedIndex;
  } else if (alignment == "sorted_descending") {
    c.prior_alignment = PriorAlignment::SortedDescending;
  } else {
    throw std::invalid_argument("LossConfig: unknown prior_alignment \"" + alignment + "\"");
  }
  if (!(c.sigma > 0.0)) throw std::invalid_argument("LossConfig: sigma must be > 0");
  if (!(c.sharpen_T > 0.0) || c.sharpen_T > 1.0) {
    throw std::invalid_argument("LossConfig: sharpen_t must lie in (0, 1]");
  }
  if (!(c.lambda >= 0.0)) throw std::invalid_argument("LossConfig: lambda must be >= 0");
}

}  // namespace priorlab
