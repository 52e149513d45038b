#include "priorlab/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "priorlab/util.hpp"

namespace priorlab {

Partition::Partition(std::vector<int> assignment, int num_clusters)
    : assign_(std::move(assignment)), k_(num_clusters) {
  if (k_ < 1) throw std::invalid_argument("Partition: needs at least one cluster");
  if (assign_.empty()) throw std::invalid_argument("Partition: needs at least one point");
  for (std::size_t i = 0; i < assign_.size(); ++i) {
    if (assign_[i] < 0 || assign_[i] >= k_) {
      throw std::invalid_argument("Partition: point " + std::to_string(i) +
                                  " assigned to invalid cluster " + std::to_string(assign_[i]));
    }
  }
}

std::vector<int> Partition::counts() const {
  std::vector<int> c(k_, 0);
  for (int a : assign_) ++c[a];
  return c;
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& X, const Partition& p) {
  if (X.rows() != p.size()) throw std::invalid_argument("cluster_means: size mismatch");
  const int k = p.num_clusters();
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(k, X.cols());
  const std::vector<int> counts = p.counts();
  for (int c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("cluster_means: cluster " + std::to_string(c) + " is empty");
    }
  }
  for (int i = 0; i < p.size(); ++i) mu.row(p[i]) += X.row(i);
  for (int c = 0; c < k; ++c) mu.row(c) /= static_cast<double>(counts[c]);
  return mu;
}

double explicit_kmeans_objective(const Eigen::MatrixXd& X, const Partition& p) {
  if (X.rows() != p.size()) throw std::invalid_argument("explicit_kmeans_objective: size mismatch");
  const int k = p.num_clusters();
  const int d = static_cast<int>(X.cols());
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(k, d);
  std::vector<int> counts(k, 0);
  for (int i = 0; i < p.size(); ++i) {
    mu.row(p[i]) += X.row(i);
    ++counts[p[i]];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) mu.row(c) /= static_cast<double>(counts[c]);
  }
  double obj = 0.0;
  for (int i = 0; i < p.size(); ++i) obj += (X.row(i) - mu.row(p[i])).squaredNorm();
  return obj;
}

double implicit_kmeans_objective(const Eigen::MatrixXd& X, const Partition& p) {
  if (X.rows() != p.size()) throw std::invalid_argument("implicit_kmeans_objective: size mismatch");
  const int k = p.num_clusters();
  std::vector<std::vector<int>> members(k);
  for (int i = 0; i < p.size(); ++i) members[p[i]].push_back(i);
  double obj = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto& m = members[c];
    if (m.empty()) continue;
    double pairs = 0.0;
    for (int i : m) {
      for (int j : m) pairs += (X.row(i) - X.row(j)).squaredNorm();
    }
    obj += pairs / (2.0 * static_cast<double>(m.size()));
  }
  return obj;
}

namespace {

// Scans assignments [begin, end) of the K^N odometer (point 0 is the most
// significant digit) and keeps the first strict improvement, which is the
// lexicographically smallest optimum of the range.
struct ScanResult {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<int> assignment;
};

ScanResult scan_range(const Eigen::MatrixXd& X, int k, std::uint64_t begin, std::uint64_t end,
                      const ClusterObjectiveFn& objective) {
  const int n = static_cast<int>(X.rows());
  ScanResult best;
  std::vector<int> assign(n, 0);
  // Decode `begin` into the odometer.
  std::uint64_t code = begin;
  for (int i = n - 1; i >= 0; --i) {
    assign[i] = static_cast<int>(code % static_cast<std::uint64_t>(k));
    code /= static_cast<std::uint64_t>(k);
  }
  for (std::uint64_t it = begin; it < end; ++it) {
    const Partition p(assign, k);
    const double obj = objective(X, p);
    if (obj < best.objective) {
      best.objective = obj;
      best.assignment = assign;
    }
    // Increment the odometer (least significant digit last).
    for (int i = n - 1; i >= 0; --i) {
      if (++assign[i] < k) break;
      assign[i] = 0;
    }
  }
  return best;
}

}  // namespace

BruteForceResult brute_force_optimum(const Eigen::MatrixXd& X, int k, KmeansMode mode,
                                     std::uint64_t cap,
                                     const ClusterObjectiveFn& objective_override) {
  const int n = static_cast<int>(X.rows());
  if (n < 1) throw std::invalid_argument("brute_force_optimum: empty data");
  if (k < 1) throw std::invalid_argument("brute_force_optimum: k must be >= 1");

  // K^N with overflow guard against the cap.
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > cap / static_cast<std::uint64_t>(k)) {
      throw std::invalid_argument("brute_force_optimum: K^N exceeds enumeration cap of " +
                                  std::to_string(cap));
    }
    total *= static_cast<std::uint64_t>(k);
  }
  if (total > cap) {
    throw std::invalid_argument("brute_force_optimum: K^N exceeds enumeration cap of " +
                                std::to_string(cap));
  }

  ClusterObjectiveFn objective = objective_override;
  if (!objective) {
    objective = (mode == KmeansMode::Explicit) ? explicit_kmeans_objective
                                               : implicit_kmeans_objective;
  }

  const int threads = std::min<int>(thread_cap(), 8);
  std::vector<ScanResult> results;
  if (threads <= 1 || total < 1024) {
    results.push_back(scan_range(X, k, 0, total, objective));
  } else {
    results.resize(threads);
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (total + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::uint64_t b = std::min<std::uint64_t>(t * chunk, total);
      const std::uint64_t e = std::min<std::uint64_t>(b + chunk, total);
      pool.emplace_back([&, t, b, e] { results[t] = scan_range(X, k, b, e, objective); });
    }
    for (auto& th : pool) th.join();
  }

  // Deterministic merge: lowest objective, exact ties to the lexicographically
  // smaller assignment (ranges are scanned in lexicographic order).
  const ScanResult* best = &results[0];
  for (const ScanResult& r : results) {
    if (r.assignment.empty()) continue;
    if (best->assignment.empty() || r.objective < best->objective ||
        (r.objective == best->objective && r.assignment < best->assignment)) {
      best = &r;
    }
  }
  return BruteForceResult{Partition(best->assignment, k), best->objective, total};
}

namespace {

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd centroids(k, X.cols());
  centroids.row(0) = X.row(static_cast<int>(rng.uniform_int(n)));
  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i) d2(i) = (X.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    std::vector<double> w(d2.data(), d2.data() + n);
    double total = 0.0;
    for (double v : w) total += v;
    int pick;
    if (total > 0.0) {
      pick = static_cast<int>(rng.sample_categorical(w));
    } else {
      pick = static_cast<int>(rng.uniform_int(n));  // all points coincide
    }
    centroids.row(c) = X.row(pick);
    for (int i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (X.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

LloydResult lloyd_from(const Eigen::MatrixXd& X, Eigen::MatrixXd centroids, int max_iter,
                       double tol) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(centroids.rows());
  std::vector<int> assign(n, 0);
  std::vector<double> trace;
  double prev_obj = std::numeric_limits<double>::infinity();
  int iter = 0;

  for (iter = 0; iter < max_iter; ++iter) {
    // Assignment step; ties go to the lowest cluster index.
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (X.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (X.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
    }

    // Re-seed emptied clusters at the point farthest from their centroid.
    // Stealing a point can empty its donor, so sweep until stable.
    for (int pass = 0; pass < k; ++pass) {
      std::vector<int> counts(k, 0);
      for (int a : assign) ++counts[a];
      int empty = -1;
      for (int c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          empty = c;
          break;
        }
      }
      if (empty < 0) break;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = (X.row(i) - centroids.row(empty)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centroids.row(empty) = X.row(far);
      assign[far] = empty;
    }

    // Update step.
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      mu.row(assign[i]) += X.row(i);
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = mu.row(c) / static_cast<double>(counts[c]);
      }
    }

    const double obj = explicit_kmeans_objective(X, Partition(assign, k));
    trace.push_back(obj);
    if (prev_obj - obj <= tol) {
      prev_obj = std::min(prev_obj, obj);
      ++iter;
      break;
    }
    prev_obj = obj;
  }

  return LloydResult{std::move(centroids), Partition(assign, k), trace.back(), iter,
                     std::move(trace)};
}

}  // namespace

LloydResult lloyd(const Eigen::MatrixXd& X, int k, const LloydOptions& opts) {
  const int n = static_cast<int>(X.rows());
  if (k < 1 || k > n) {
    throw std::invalid_argument("lloyd: need 1 <= k <= n, got k=" + std::to_string(k) +
                                ", n=" + std::to_string(n));
  }
  if (opts.max_iter < 1) throw std::invalid_argument("lloyd: max_iter must be >= 1");

  if (opts.init == LloydInit::FirstK) {
    return lloyd_from(X, X.topRows(k), opts.max_iter, opts.tol);
  }

  Rng rng(opts.seed);
  LloydResult best = lloyd_from(X, kmeanspp_seed(X, k, rng), opts.max_iter, opts.tol);
  const int restarts = std::max(1, opts.restarts);
  for (int r = 1; r < restarts; ++r) {
    LloydResult res = lloyd_from(X, kmeanspp_seed(X, k, rng), opts.max_iter, opts.tol);
    if (res.objective < best.objective) best = std::move(res);
  }
  return best;
}

LloydResult lloyd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& init_centroids, int max_iter,
                  double tol) {
  if (init_centroids.rows() < 1 || init_centroids.cols() != X.cols()) {
    throw std::invalid_argument("lloyd: bad initial centroid shape");
  }
  return lloyd_from(X, init_centroids, max_iter, tol);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("adjusted_rand_index: labelings must be same nonzero length");
  }
  const auto relabel = [](const std::vector<int>& v) {
    std::vector<int> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), v[i]) -
                                sorted.begin());
    }
    return std::make_pair(out, static_cast<int>(sorted.size()));
  };
  const auto [la, ka] = relabel(a);
  const auto [lb, kb] = relabel(b);

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
  for (std::size_t i = 0; i < la.size(); ++i) table(la[i], lb[i]) += 1.0;

  const auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_ij = 0.0;
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) sum_ij += choose2(table(i, j));
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < ka; ++i) sum_a += choose2(table.row(i).sum());
  for (int j = 0; j < kb; ++j) sum_b += choose2(table.col(j).sum());
  const double total = choose2(static_cast<double>(la.size()));
  if (total == 0.0) return 1.0;  // single point
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;  // both partitions trivial
  return (sum_ij - expected) / (maximum - expected);
}

}  // namespace priorlab
