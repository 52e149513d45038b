#pragma once

#include <Eigen/Core>

#include "priorlab/prob.hpp"

namespace priorlab {

/**
 * Isotropic Gaussian mixture in linear-head form: column k of W is the mean
 * of component k, every component shares covariance sigma * I, and `prior`
 * holds the mixing weights.
 */
struct GmmModel {
  Eigen::MatrixXd W;  // d x K, columns are component means
  ProbVector prior;   // length K
  double sigma = 1.0;

  GmmModel(Eigen::MatrixXd w, ProbVector prior, double sigma = 1.0);
  int dim() const { return static_cast<int>(W.rows()); }
  int num_components() const { return static_cast<int>(W.cols()); }
};

/**
 * Component responsibilities for a point x:
 *   softmax over k of  (w_k . x - |x|^2/2 - |w_k|^2/2) / sigma + ln prior_k,
 * which is Bayes' rule for N(w_k, sigma I) components (the quadratic terms
 * expand -|x - w_k|^2 / 2).  The prior term enters unscaled: it weights the
 * component densities, not the exponent.
 */
ProbVector gmm_posterior(const GmmModel& model, const Eigen::VectorXd& x);

/**
 * Soft clustering objective of the model on data X (one sample per row):
 * responsibility-weighted squared Mahalanobis distances, plus the
 * log-determinant volume term N * K * d * ln(sigma), plus the per-sample
 * KL from responsibilities to the prior.
 */
double gmm_objective(const GmmModel& model, const Eigen::MatrixXd& X);

/**
 * Reduced form valid when the prior is uniform, sigma = 1, and both the rows
 * of X and columns of W have unit norm (checked within 1e-9):
 *   sum_x [ sum_k softmax(W^T x)_k / 2 * |x - w_k|^2  -  H(softmax(W^T x)) ].
 * Differs from gmm_objective by a constant independent of W.
 */
double simplified_objective(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X);

/**
 * Zero-temperature limit of the sigma-scaled prototype-matching loss.
 *
 * Each sample is owned by the component nearest its positive view,
 * k(n) = argmin_c |x+_n - w_c| (an exact distance tie is an error).  Value:
 *   (1/2N) sum_n ( |x_n - w_k(n)|^2 - min_c |x_n - w_c|^2 )
 *   + lambda * sum_k (N_k/N) ln( (N_k/N) / prior_k ).
 * The first term vanishes iff every anchor and its positive share a nearest
 * component; the second compares the induced cluster masses to the prior and
 * requires prior mass on every non-empty component.
 */
double msn_zero_temp_limit(const Eigen::MatrixXd& X_anchor, const Eigen::MatrixXd& X_positive,
                           const Eigen::MatrixXd& W, const ProbVector& prior, double lambda);

}  // namespace priorlab
