#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "priorlab/prob.hpp"
#include "priorlab/rng.hpp"

namespace priorlab {

/**
 * One latent factor of variation: how many values it takes, how those values
 * are distributed across samples, and the geometry of its embedding (mean
 * separation and isotropic noise).
 */
struct FactorSpec {
  int num_values = 1;
  PriorSpec distribution = PriorSpec::uniform();
  int embedding_dim = 1;
  double separation = 1.0;
  double noise_sigma = 0.1;

  void validate() const;
};

/// Defaults for the two-factor toy: a balanced 10-value primary factor and a
/// power-law 10-value secondary factor, 16 dims each.
FactorSpec default_primary_factor();
FactorSpec default_secondary_factor();

void to_json(nlohmann::json& j, const FactorSpec& f);
void from_json(const nlohmann::json& j, FactorSpec& f);

struct SynthDataset {
  Eigen::MatrixXd X;  // N x d
  std::vector<int> primary_labels;
  std::vector<int> secondary_labels;  // empty for single-factor datasets
  int num_primary = 0;
  int num_secondary = 0;  // 0 for single-factor datasets

  int size() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

/**
 * Mean placement shared by the generators: value v sits at separation * e_v
 * when num_values <= dim (pairwise distance separation * sqrt(2)); otherwise
 * means are rejection-sampled in the box [-2s, 2s]^dim at pairwise distance
 * >= separation, throwing after bounded retries when packing fails.
 * Returned as one mean per row.
 */
Eigen::MatrixXd place_factor_means(int num_values, int dim, double separation, Rng& rng);

/**
 * Isotropic Gaussian blobs with a configurable class distribution.  Class
 * counts are deterministic largest-remainder quotas of N * p_k, so the
 * composition is a pure function of (classes, distribution, N); the seed
 * only moves the noise (and mean placement when classes > d).  Rows are
 * grouped by class in label order.
 */
SynthDataset gaussian_mixture(int classes, const PriorSpec& class_distribution, int n, int d,
                              double separation, double noise_sigma, std::uint64_t seed);

/**
 * Two-factor composite: x = concat(primary mean + noise, secondary mean +
 * noise), labels drawn iid from each factor's distribution, independently of
 * each other.
 */
SynthDataset two_factor_dataset(const FactorSpec& primary, const FactorSpec& secondary, int n,
                                std::uint64_t seed);

struct ViewConfig {
  double noise_sigma = 0.0;       // additive Gaussian noise on both views
  double mask_fraction = 0.0;     // per-coordinate zeroing, anchor view only
};

/**
 * Two stochastic views per row.  Both views get independent additive noise;
 * the anchor view additionally zeroes each coordinate independently with
 * probability mask_fraction.
 */
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> make_views(const Eigen::MatrixXd& x,
                                                       const ViewConfig& config,
                                                       std::uint64_t seed);

/// CSV with header x0..x{d-1},primary[,secondary]; one row per sample.
void save_csv(const SynthDataset& dataset, const std::string& path);

/// Little-endian binary: int64 header {N, d, num_primary, num_secondary},
/// row-major doubles, then the label vectors.
void save_binary(const SynthDataset& dataset, const std::string& path);
SynthDataset load_binary(const std::string& path);

}  // namespace priorlab
