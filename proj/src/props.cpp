#include "priorlab/props.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "priorlab/losses.hpp"
#include "priorlab/mixture.hpp"
#include "priorlab/prob.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/transport.hpp"

namespace priorlab {

namespace {

std::string format_residual(const char* what, int trial, double value, double bound) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s: trial %d residual %.3e exceeds %.1e", what, trial, value,
                bound);
  return buf;
}

Eigen::MatrixXd random_points(Rng& rng, int n, int d, double scale) {
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = scale * rng.normal();
  }
  return x;
}

void record(SuiteReport& r, double residual, double bound, const char* what, int trial) {
  ++r.checks;
  r.worst_residual = std::max(r.worst_residual, residual);
  if (!(residual <= bound)) r.failures.push_back(format_residual(what, trial, residual, bound));
}

}  // namespace

void PropsConfig::validate() const {
  if (trials < 1 || trials > 10000)
    throw std::invalid_argument("PropsConfig: trials must be in [1, 10000]");
  if (max_points < 4 || max_points > 10)
    throw std::invalid_argument("PropsConfig: max_points must be in [4, 10]");
  if (max_clusters < 2 || max_clusters > 4)
    throw std::invalid_argument("PropsConfig: max_clusters must be in [2, 4]");
}

void to_json(nlohmann::json& j, const PropsConfig& c) {
  j = {{"max_points", c.max_points},
       {"max_clusters", c.max_clusters},
       {"trials", c.trials},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PropsConfig& c) {
  j.at("max_points").get_to(c.max_points);
  j.at("max_clusters").get_to(c.max_clusters);
  j.at("trials").get_to(c.trials);
  j.at("seed").get_to(c.seed);
  c.validate();
}

void to_json(nlohmann::json& j, const SuiteReport& r) {
  j = {{"name", r.name},
       {"passed", r.passed},
       {"checks", r.checks},
       {"worst_residual", r.worst_residual},
       {"failures", r.failures}};
}

void merge_report(SuiteReport& into, const SuiteReport& part) {
  into.checks += part.checks;
  into.worst_residual = std::max(into.worst_residual, part.worst_residual);
  for (const std::string& f : part.failures) into.failures.push_back(part.name + ": " + f);
  into.passed = into.failures.empty();
}

SuiteReport check_bruteforce_equivalence(const PropsConfig& cfg,
                                         const ClusterObjectiveFn& pairwise_override) {
  cfg.validate();
  SuiteReport r{"bruteforce-equivalence"};
  Rng rng(cfg.seed);
  for (int t = 0; t < cfg.trials; ++t) {
    const int n = 4 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.max_points - 3)));
    const int k = 2 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.max_clusters - 1)));
    const Eigen::MatrixXd x = random_points(rng, n, 2, 2.0);
    const BruteForceResult e = brute_force_optimum(x, k, KmeansMode::Explicit);
    const BruteForceResult m =
        brute_force_optimum(x, k, KmeansMode::Implicit, 4000000, pairwise_override);
    record(r, std::abs(e.objective - m.objective), 1e-9, "optimum gap", t);
    // Cross-attainment: each optimizer's partition reaches the other's value.
    const ClusterObjectiveFn pairwise =
        pairwise_override ? pairwise_override : ClusterObjectiveFn(implicit_kmeans_objective);
    record(r, pairwise(x, e.partition) - m.objective, 1e-9, "pairwise value of centroid optimum", t);
    record(r, explicit_kmeans_objective(x, m.partition) - e.objective, 1e-9,
           "centroid value of pairwise optimum", t);
  }
  r.passed = r.failures.empty();
  return r;
}

SuiteReport check_objective_identity(const PropsConfig& cfg,
                                     const ClusterObjectiveFn& pairwise_override) {
  cfg.validate();
  SuiteReport r{"objective-identity"};
  Rng rng(cfg.seed + 1);
  const ClusterObjectiveFn pairwise =
      pairwise_override ? pairwise_override : ClusterObjectiveFn(implicit_kmeans_objective);
  for (int t = 0; t < 2 * cfg.trials; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(11));  // 2..12
    const int d = 1 + static_cast<int>(rng.uniform_int(3));   // 1..3
    const int k = 1 + static_cast<int>(rng.uniform_int(3));   // 1..3
    const Eigen::MatrixXd x = random_points(rng, n, d, 2.0);
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (int& a : assign) a = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
    const Partition p(assign, k);
    const double e = explicit_kmeans_objective(x, p);
    const double m = pairwise(x, p);
    const double rel = std::abs(e - m) / std::max({std::abs(e), std::abs(m), 1e-300});
    record(r, rel, 1e-12, "objective relative gap", t);
  }
  r.passed = r.failures.empty();
  return r;
}

SuiteReport check_covariance_split(const PropsConfig& cfg) {
  cfg.validate();
  SuiteReport r{"covariance-split"};
  Rng rng(cfg.seed + 2);
  for (int t = 0; t < cfg.trials; ++t) {
    const int pairs = 2 + static_cast<int>(rng.uniform_int(6));  // 2..7
    const int d = 2 + static_cast<int>(rng.uniform_int(4));      // 2..5
    Eigen::MatrixXd z = random_points(rng, 2 * pairs, d, 1.0);
    z.rowwise() -= z.colwise().mean().eval();
    const CovarianceSplit split = covariance_decomposition_check(z, paired_view_graph(pairs));
    record(r, split.cov_residual, 1e-10, "covariance reconstruction", t);
    record(r, split.pairwise_residual, 1e-10, "pairwise trace identity", t);
  }
  r.passed = r.failures.empty();
  return r;
}

SuiteReport check_posterior_bayes(const PropsConfig& cfg) {
  cfg.validate();
  SuiteReport r{"posterior-bayes"};
  Rng rng(cfg.seed + 3);
  for (int t = 0; t < 5 * cfg.trials; ++t) {
    const int k = 2 + static_cast<int>(rng.uniform_int(4));  // 2..5
    const int d = 1 + static_cast<int>(rng.uniform_int(3));  // 1..3
    Eigen::MatrixXd w(d, k);
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < d; ++i) w(i, j) = 2.0 * rng.normal();
    }
    Eigen::VectorXd weights(k);
    for (int j = 0; j < k; ++j) weights(j) = rng.uniform() + 0.05;
    const double sigma = 0.3 + rng.uniform();
    const GmmModel model(w, ProbVector::normalized(weights), sigma);
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = 2.0 * rng.normal();

    // Direct Bayes quotient: prior-weighted component densities, normalized.
    Eigen::VectorXd density(k);
    for (int j = 0; j < k; ++j) {
      const double sq = (x - w.col(j)).squaredNorm();
      density(j) = model.prior[j] * std::exp(-sq / (2.0 * sigma));
    }
    density /= density.sum();

    const ProbVector post = gmm_posterior(model, x);
    record(r, (post.values() - density).cwiseAbs().maxCoeff(), 1e-10, "posterior vs Bayes", t);
  }
  r.passed = r.failures.empty();
  return r;
}

SuiteReport check_sharp_limit(const PropsConfig& cfg) {
  cfg.validate();
  SuiteReport r{"sharp-limit"};
  Eigen::MatrixXd z(4, 1), w(1, 2);
  z << -1.0, -1.0, -1.0, 1.0;
  w << -1.0, 1.0;
  const double lambda = 1.0;
  const ProbVector prior = ProbVector::uniform(2);

  const double limit = msn_zero_temp_limit(z, z, w, prior, lambda);
  record(r, std::abs(limit - 0.130812), 1e-6, "limit value", 0);

  std::vector<ProbVector> targets;
  for (int i = 0; i < 4; ++i) targets.push_back(ProbVector::one_hot(2, z(i, 0) < 0.0 ? 0 : 1));

  const double sigmas[] = {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
  double prev_gap = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 7; ++s) {
    const double sigma = sigmas[s];
    const PosteriorBatch batch(posterior_from_embeddings(z, w, sigma), targets);
    const double value =
        sigma * pmsn_loss(batch, lambda / sigma, prior, PriorAlignment::FixedIndex);
    const double gap = std::abs(value - limit);
    // Monotone approach: each smaller sigma must not widen the gap.
    record(r, gap - prev_gap, 1e-12, "gap increase along the sigma grid", s);
    prev_gap = gap;
  }
  record(r, prev_gap, 1e-3, "final gap at sigma = 0.001", 6);
  r.passed = r.failures.empty();
  return r;
}

SuiteReport check_projection_feasibility(const PropsConfig& cfg) {
  cfg.validate();
  SuiteReport r{"projection-feasibility"};
  Rng rng(cfg.seed + 4);
  for (int t = 0; t < cfg.trials; ++t) {
    const int k = 2 + static_cast<int>(rng.uniform_int(7));  // 2..8
    const int max_ratio = std::max<int>(1, 64 / k);
    const int n = k * (1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_ratio))));
    Eigen::MatrixXd raw(k, n);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) raw(i, j) = std::exp(rng.normal());
    }
    try {
      const SinkhornResult result = sinkhorn_project(raw);  // at most 1000 sweeps
      const Eigen::MatrixXd& q = result.assignment.matrix();
      const double target_row = static_cast<double>(n) / k;
      const double row_err = (q.rowwise().sum().array() - target_row).abs().maxCoeff();
      const double col_err = (q.colwise().sum().array() - 1.0).abs().maxCoeff();
      record(r, row_err, 1e-8, "row marginal", t);
      record(r, col_err, 1e-8, "column marginal", t);

      // Idempotence: projecting a feasible matrix changes nothing material.
      const SinkhornResult again = sinkhorn_project(q);
      record(r, (again.assignment.matrix() - q).cwiseAbs().maxCoeff(), 1e-8, "idempotence", t);
    } catch (const ConvergenceError& e) {
      ++r.checks;
      r.worst_residual = std::max(r.worst_residual, e.residual);
      r.failures.push_back(format_residual("projection did not converge", t, e.residual, 1e-8));
    }
  }
  r.passed = r.failures.empty();
  return r;
}

SuiteReport run_clustering_suite(const PropsConfig& cfg,
                                 const ClusterObjectiveFn& pairwise_override) {
  SuiteReport r{"clustering"};
  merge_report(r, check_bruteforce_equivalence(cfg, pairwise_override));
  merge_report(r, check_objective_identity(cfg, pairwise_override));
  return r;
}

SuiteReport run_covariance_suite(const PropsConfig& cfg) {
  SuiteReport r{"covariance"};
  merge_report(r, check_covariance_split(cfg));
  return r;
}

SuiteReport run_mixture_suite(const PropsConfig& cfg) {
  SuiteReport r{"mixture"};
  merge_report(r, check_posterior_bayes(cfg));
  merge_report(r, check_sharp_limit(cfg));
  return r;
}

SuiteReport run_transport_suite(const PropsConfig& cfg) {
  SuiteReport r{"transport"};
  merge_report(r, check_projection_feasibility(cfg));
  return r;
}

std::vector<SuiteReport> run_all_suites(const PropsConfig& cfg) {
  cfg.validate();
  return {run_clustering_suite(cfg), run_covariance_suite(cfg), run_mixture_suite(cfg),
          run_transport_suite(cfg)};
}

}  // namespace priorlab
