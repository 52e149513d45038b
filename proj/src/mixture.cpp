#include "priorlab/mixture.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "priorlab/util.hpp"

namespace priorlab {

GmmModel::GmmModel(Eigen::MatrixXd w, ProbVector prior_, double sigma_)
    : W(std::move(w)), prior(std::move(prior_)), sigma(sigma_) {
  if (W.rows() < 1 || W.cols() < 1) throw std::invalid_argument("GmmModel: W must be nonempty");
  if (prior.size() != num_components()) {
    throw std::invalid_argument("GmmModel: prior length " + std::to_string(prior.size()) +
                                " != number of components " + std::to_string(num_components()));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("GmmModel: sigma must be positive and finite");
  }
}

ProbVector gmm_posterior(const GmmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.dim()) {
    throw std::invalid_argument("gmm_posterior: x has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(model.dim()));
  }
  const int k = model.num_components();
  Eigen::VectorXd logits = model.W.transpose() * x;
  const double xx = 0.5 * x.squaredNorm();
  for (int c = 0; c < k; ++c) {
    logits(c) = (logits(c) - xx - 0.5 * model.W.col(c).squaredNorm()) / model.sigma;
    if (model.prior[c] > 0.0) {
      logits(c) += std::log(model.prior[c]);
    } else {
      logits(c) = -std::numeric_limits<double>::infinity();
    }
  }
  return ProbVector(softmax(logits));
}

double gmm_objective(const GmmModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.dim()) throw std::invalid_argument("gmm_objective: dimension mismatch");
  if (X.rows() < 1) throw std::invalid_argument("gmm_objective: empty data");
  const int n = static_cast<int>(X.rows());
  const int k = model.num_components();
  const int d = model.dim();

  double obj = static_cast<double>(n) * k * d * std::log(model.sigma);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const ProbVector p = gmm_posterior(model, x);
    for (int c = 0; c < k; ++c) {
      obj += 0.5 * p[c] * (x - model.W.col(c)).squaredNorm() / model.sigma;
    }
    obj += kl_divergence(p, model.prior);
  }
  return obj;
}

double simplified_objective(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X) {
  if (X.cols() != W.rows()) throw std::invalid_argument("simplified_objective: dimension mismatch");
  constexpr double kNormTol = 1e-9;
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    if (std::abs(W.col(c).norm() - 1.0) > kNormTol) {
      throw std::invalid_argument("simplified_objective: column " + std::to_string(c) +
                                  " of W is not unit norm");
    }
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (std::abs(X.row(i).norm() - 1.0) > kNormTol) {
      throw std::invalid_argument("simplified_objective: row " + std::to_string(i) +
                                  " of X is not unit norm");
    }
  }

  double obj = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const Eigen::VectorXd p = softmax(W.transpose() * x);
    for (Eigen::Index c = 0; c < W.cols(); ++c) {
      obj += 0.5 * p(c) * (x - W.col(c)).squaredNorm();
      if (p(c) > 0.0) obj += p(c) * std::log(p(c));  // minus entropy
    }
  }
  return obj;
}

double msn_zero_temp_limit(const Eigen::MatrixXd& X_anchor, const Eigen::MatrixXd& X_positive,
                           const Eigen::MatrixXd& W, const ProbVector& prior, double lambda) {
  const int n = static_cast<int>(X_anchor.rows());
  const int k = static_cast<int>(W.cols());
  if (X_positive.rows() != n || X_positive.cols() != X_anchor.cols()) {
    throw std::invalid_argument("msn_zero_temp_limit: anchor/positive shapes differ");
  }
  if (X_anchor.cols() != W.rows()) {
    throw std::invalid_argument("msn_zero_temp_limit: dimension mismatch with W");
  }
  if (prior.size() != k) throw std::invalid_argument("msn_zero_temp_limit: prior length != K");
  if (n < 1) throw std::invalid_argument("msn_zero_temp_limit: empty batch");

  std::vector<int> owner(n);
  std::vector<int> mass(k, 0);
  double margin = 0.0;
  for (int i = 0; i < n; ++i) {
    // Nearest component of the positive view defines ownership.
    int arg = 0;
    double best = (X_positive.row(i).transpose() - W.col(0)).squaredNorm();
    bool tied = false;
    for (int c = 1; c < k; ++c) {
      const double d = (X_positive.row(i).transpose() - W.col(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = c;
        tied = false;
      } else if (d == best) {
        tied = true;
      }
    }
    if (tied) {
      throw std::domain_error("msn_zero_temp_limit: sample " + std::to_string(i) +
                              " is equidistant from two components; ownership is undefined");
    }
    owner[i] = arg;
    ++mass[arg];

    double anchor_min = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      anchor_min = std::min(anchor_min, (X_anchor.row(i).transpose() - W.col(c)).squaredNorm());
    }
    margin += (X_anchor.row(i).transpose() - W.col(arg)).squaredNorm() - anchor_min;
  }
  margin /= 2.0 * static_cast<double>(n);

  double mass_term = 0.0;
  for (int c = 0; c < k; ++c) {
    if (mass[c] == 0) continue;
    if (prior[c] <= 0.0) {
      throw std::domain_error("msn_zero_temp_limit: component " + std::to_string(c) +
                              " holds samples but the prior gives it zero mass");
    }
    const double frac = static_cast<double>(mass[c]) / static_cast<double>(n);
    mass_term += frac * std::log(frac / prior[c]);
  }
  return margin + lambda * mass_term;
}

}  // namespace priorlab
