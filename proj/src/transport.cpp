#include "priorlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "priorlab/util.hpp"

namespace priorlab {

SoftAssignment::SoftAssignment(Eigen::MatrixXd p) : p_(std::move(p)) {
  if (p_.rows() < 1 || p_.cols() < 1) {
    throw std::invalid_argument("SoftAssignment: matrix must be nonempty");
  }
  for (Eigen::Index k = 0; k < p_.rows(); ++k) {
    for (Eigen::Index n = 0; n < p_.cols(); ++n) {
      if (!(p_(k, n) >= 0.0)) {
        throw std::invalid_argument("SoftAssignment: negative or non-finite entry at (" +
                                    std::to_string(k) + ", " + std::to_string(n) + ")");
      }
    }
  }
  for (Eigen::Index n = 0; n < p_.cols(); ++n) {
    const double s = p_.col(n).sum();
    if (std::abs(s - 1.0) > kColumnTolerance) {
      throw std::invalid_argument("SoftAssignment: column " + std::to_string(n) + " sums to " +
                                  std::to_string(s) + ", not 1");
    }
  }
}

namespace {

double constraint_residual(const Eigen::MatrixXd& p, double row_target) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    r = std::max(r, std::abs(p.row(k).sum() - row_target));
  }
  for (Eigen::Index n = 0; n < p.cols(); ++n) {
    r = std::max(r, std::abs(p.col(n).sum() - 1.0));
  }
  return r;
}

}  // namespace

SinkhornResult sinkhorn_project(const Eigen::MatrixXd& raw, const SinkhornOptions& opts) {
  const Eigen::Index k = raw.rows();
  const Eigen::Index n = raw.cols();
  if (k < 1 || n < 1) throw std::invalid_argument("sinkhorn_project: matrix must be nonempty");
  if (opts.max_iter < 1) throw std::invalid_argument("sinkhorn_project: max_iter must be >= 1");
  double min_entry = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(raw(i, j) > 0.0)) {
        throw std::invalid_argument("sinkhorn_project: entry (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") is not strictly positive");
      }
      min_entry = std::min(min_entry, raw(i, j));
    }
  }

  const double row_target = static_cast<double>(n) / static_cast<double>(k);
  const bool log_domain = min_entry < 1e-30;

  if (!log_domain) {
    Eigen::MatrixXd p = raw;
    for (int it = 1; it <= opts.max_iter; ++it) {
      for (Eigen::Index i = 0; i < k; ++i) p.row(i) *= row_target / p.row(i).sum();
      for (Eigen::Index j = 0; j < n; ++j) p.col(j) *= 1.0 / p.col(j).sum();
      const double res = constraint_residual(p, row_target);
      if (res <= opts.tol) {
        return SinkhornResult{SoftAssignment(std::move(p)), it, res};
      }
    }
    throw ConvergenceError("sinkhorn_project: residual above tolerance after max_iter sweeps",
                           constraint_residual(p, row_target), opts.max_iter);
  }

  // Log-domain scaling for inputs with entries too small for direct products.
  Eigen::MatrixXd logp = raw.array().log();
  const double log_row_target = std::log(row_target);
  const auto residual_of = [&](const Eigen::MatrixXd& lp) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      r = std::max(r, std::abs(std::exp(logsumexp(lp.row(i).transpose())) - row_target));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      r = std::max(r, std::abs(std::exp(logsumexp(lp.col(j))) - 1.0));
    }
    return r;
  };
  for (int it = 1; it <= opts.max_iter; ++it) {
    for (Eigen::Index i = 0; i < k; ++i) {
      logp.row(i).array() += log_row_target - logsumexp(logp.row(i).transpose());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      logp.col(j).array() -= logsumexp(logp.col(j));
    }
    const double res = residual_of(logp);
    if (res <= opts.tol) {
      return SinkhornResult{SoftAssignment(Eigen::MatrixXd(logp.array().exp().matrix())), it, res};
    }
  }
  throw ConvergenceError("sinkhorn_project: residual above tolerance after max_iter sweeps",
                         residual_of(logp), opts.max_iter);
}

double constrained_kmeans_objective(const Eigen::MatrixXd& X, const Partition& p,
                                    const std::vector<int>& cardinalities) {
  if (static_cast<int>(cardinalities.size()) != p.num_clusters()) {
    throw std::invalid_argument("constrained_kmeans_objective: cardinality list length " +
                                std::to_string(cardinalities.size()) + " != K = " +
                                std::to_string(p.num_clusters()));
  }
  int total = 0;
  for (int c : cardinalities) {
    if (c < 0) throw std::invalid_argument("constrained_kmeans_objective: negative cardinality");
    total += c;
  }
  if (total != p.size()) {
    throw std::invalid_argument("constrained_kmeans_objective: cardinalities sum to " +
                                std::to_string(total) + ", expected " + std::to_string(p.size()));
  }
  const std::vector<int> counts = p.counts();
  for (int c = 0; c < p.num_clusters(); ++c) {
    if (counts[c] != cardinalities[c]) {
      throw std::invalid_argument("constrained_kmeans_objective: cluster " + std::to_string(c) +
                                  " holds " + std::to_string(counts[c]) + " points, required " +
                                  std::to_string(cardinalities[c]));
    }
  }
  return explicit_kmeans_objective(X, p);
}

double swav_loss(const SoftAssignment& anchor, const Eigen::MatrixXd& target_raw,
                 const SinkhornOptions& opts) {
  if (anchor.num_clusters() != target_raw.rows() || anchor.num_samples() != target_raw.cols()) {
    throw std::invalid_argument("swav_loss: anchor and target shapes differ");
  }
  const SinkhornResult projected = sinkhorn_project(target_raw, opts);
  const Eigen::MatrixXd& q = projected.assignment.matrix();
  const Eigen::MatrixXd& p = anchor.matrix();
  double loss = 0.0;
  for (int n = 0; n < anchor.num_samples(); ++n) {
    for (int c = 0; c < anchor.num_clusters(); ++c) {
      if (q(c, n) > 0.0) {
        if (p(c, n) <= 0.0) {
          throw std::domain_error("swav_loss: anchor has zero mass at cluster " +
                                  std::to_string(c) + ", sample " + std::to_string(n) +
                                  " where target is positive");
        }
        loss -= q(c, n) * std::log(p(c, n));
      }
    }
  }
  return loss / static_cast<double>(anchor.num_samples());
}

Partition round_to_balanced_partition(const SoftAssignment& p) {
  const int k = p.num_clusters();
  const int n = p.num_samples();
  if (n % k != 0) {
    throw std::invalid_argument("round_to_balanced_partition: N = " + std::to_string(n) +
                                " is not divisible by K = " + std::to_string(k));
  }
  const int capacity = n / k;

  struct Cell {
    double prob;
    int sample;
    int cluster;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(k) * n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) cells.push_back(Cell{p.matrix()(c, i), i, c});
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(b.prob, a.sample, a.cluster) < std::tie(a.prob, b.sample, b.cluster);
  });

  std::vector<int> assign(n, -1);
  std::vector<int> load(k, 0);
  int placed = 0;
  for (const Cell& cell : cells) {
    if (assign[cell.sample] >= 0 || load[cell.cluster] == capacity) continue;
    assign[cell.sample] = cell.cluster;
    ++load[cell.cluster];
    if (++placed == n) break;
  }
  return Partition(std::move(assign), k);
}

}  // namespace priorlab
