#pragma once

#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "priorlab/prob.hpp"

namespace priorlab {

/**
 * N x N view graph: entry (i, j) is 1 when samples i and j are positive
 * views of each other.  Binary, symmetric, zero diagonal.
 */
class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(Eigen::MatrixXd g);

  int size() const { return static_cast<int>(g_.rows()); }
  const Eigen::MatrixXd& matrix() const { return g_; }

  /// True when every sample has exactly one positive.
  bool single_positive() const;

 private:
  Eigen::MatrixXd g_;
};

/// View graph for B anchor/positive pairs stacked as rows [0..B) and [B..2B):
/// sample i is paired with sample i + B.
SimilarityMatrix paired_view_graph(int pairs);

/**
 * Covariance-identity plus graph-weighted invariance objective on an N x d
 * embedding matrix:
 *   alpha * ||Cov(Z) - I||_F^2 + (gamma / N) * sum_ij G_ij ||z_i - z_j||^2
 * with Cov(Z) the (1/N)-normalized covariance of the rows.
 */
double vicreg_simplified(const Eigen::MatrixXd& Z, const SimilarityMatrix& G, double alpha,
                         double gamma);

struct CovarianceSplit {
  Eigen::MatrixXd between;   // (1/N) Z^T G Z
  Eigen::MatrixXd within;    // (1/N) Z^T (I - G) Z
  double cov_residual;       // || Cov(Z) - (between + within) ||_F
  double pairwise_residual;  // | sum_ij G_ij ||z_i - z_j||^2 - 2 tr(Z^T (I-G) Z) |
};

/**
 * Splits the covariance of centered embeddings into the G-aligned and
 * complementary parts and reports how exactly the algebra closes.  Requires
 * column means within 1e-9 of zero and exactly one positive per row of G.
 */
CovarianceSplit covariance_decomposition_check(const Eigen::MatrixXd& Z,
                                               const SimilarityMatrix& G);

/// Anchor/target posterior pairs; targets are treated as constants.
struct PosteriorBatch {
  std::vector<ProbVector> anchors;
  std::vector<ProbVector> targets;

  PosteriorBatch(std::vector<ProbVector> anchors, std::vector<ProbVector> targets);
  int size() const { return static_cast<int>(anchors.size()); }
  int num_clusters() const { return anchors.front().size(); }

  /// Mean anchor posterior.
  ProbVector mean_anchor() const;
};

/// How a target prior is matched against the batch posterior mean.
enum class PriorAlignment {
  FixedIndex,         // cluster k is compared to prior entry k
  SortedDescending,   // both sides sorted by descending mass before comparing
};

/**
 * Hyperparameters shared by the posterior losses and the trainer.
 * `sigma` is the logit temperature, `sharpen_T` the target sharpening
 * exponent (targets are raised to 1/T and renormalized), `lambda` the
 * weight of the batch-mean regularizer.
 */
struct LossConfig {
  double lambda = 1.0;
  double alpha = 1.0;
  double gamma = 25.0;
  double sigma = 0.1;
  double sharpen_T = 0.25;
  PriorSpec prior = PriorSpec::uniform();
  PriorAlignment prior_alignment = PriorAlignment::FixedIndex;
};

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

/**
 * Mean anchor/target cross-entropy minus lambda times the entropy of the
 * batch-mean anchor posterior: (1/N) sum_n H(t_n, p_n) - lambda H(pbar).
 */
double msn_loss(const PosteriorBatch& batch, double lambda);

/**
 * Mean anchor/target cross-entropy plus lambda times KL(pbar || prior).
 * With a uniform prior this equals msn_loss plus the constant lambda ln K.
 */
double pmsn_loss(const PosteriorBatch& batch, double lambda, const ProbVector& prior,
                 PriorAlignment alignment = PriorAlignment::FixedIndex);

/**
 * Row-wise softmax(Z W / sigma).  Rows of Z and columns of W must be unit
 * norm within 1e-9; the caller normalizes, this function only checks.
 */
std::vector<ProbVector> posterior_from_embeddings(const Eigen::MatrixXd& Z,
                                                  const Eigen::MatrixXd& W, double sigma);

/// Temperature sharpening: entries raised to 1/T, renormalized.  T in (0, 1].
ProbVector sharpen(const ProbVector& p, double T);

/// Which batch-mean regularizer a gradient/loss evaluation uses.
enum class MeanRegularizer {
  KlToPrior,        // + lambda KL(pbar || prior)
  NegativeEntropy,  // - lambda H(pbar)
};

struct PmsnGradients {
  double loss;
  Eigen::MatrixXd d_z_anchor;  // N x d, w.r.t. the raw (unnormalized) anchors
  Eigen::MatrixXd d_w;         // d x K, w.r.t. the raw prototype matrix
};

/**
 * Loss and exact gradients of the full prototype-matching pipeline:
 * anchors and prototypes are L2-normalized inside (their Jacobians are part
 * of the gradient), posteriors taken at config.sigma, targets computed from
 * Z_target with the same prototypes, sharpened with config.sharpen_T and
 * treated as constants (stop-gradient).  The two regularizer forms share
 * one gradient path: for a uniform prior they coincide exactly, term by
 * term, so uniform-prior runs of either form are bit-identical.
 */
PmsnGradients pmsn_gradients(const Eigen::MatrixXd& Z_anchor, const Eigen::MatrixXd& Z_target,
                             const Eigen::MatrixXd& W, const LossConfig& config,
                             MeanRegularizer regularizer = MeanRegularizer::KlToPrior);

}  // namespace priorlab
