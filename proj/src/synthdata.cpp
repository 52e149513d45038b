#include "priorlab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace priorlab {

void FactorSpec::validate() const {
  if (num_values < 1) throw std::invalid_argument("FactorSpec: num_values must be positive");
  if (embedding_dim < 1) throw std::invalid_argument("FactorSpec: embedding_dim must be positive");
  if (!(separation > 0.0)) throw std::invalid_argument("FactorSpec: separation must be > 0");
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("FactorSpec: noise_sigma must be > 0");
}

FactorSpec default_primary_factor() {
  FactorSpec f;
  f.num_values = 10;
  f.distribution = PriorSpec::uniform();
  f.embedding_dim = 16;
  f.separation = 1.0;
  f.noise_sigma = 0.3;
  return f;
}

FactorSpec default_secondary_factor() {
  FactorSpec f = default_primary_factor();
  f.distribution = PriorSpec::power_law(0.5);
  return f;
}

void to_json(nlohmann::json& j, const FactorSpec& f) {
  j = {{"num_values", f.num_values},
       {"distribution", f.distribution},
       {"embedding_dim", f.embedding_dim},
       {"separation", f.separation},
       {"noise_sigma", f.noise_sigma}};
}

void from_json(const nlohmann::json& j, FactorSpec& f) {
  j.at("num_values").get_to(f.num_values);
  j.at("distribution").get_to(f.distribution);
  j.at("embedding_dim").get_to(f.embedding_dim);
  j.at("separation").get_to(f.separation);
  j.at("noise_sigma").get_to(f.noise_sigma);
  f.validate();
}

Eigen::MatrixXd place_factor_means(int num_values, int dim, double separation, Rng& rng) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(num_values, dim);
  if (num_values <= dim) {
    for (int v = 0; v < num_values; ++v) means(v, v) = separation;
    return means;
  }
  // Box packing: candidates uniform in [-2s, 2s]^dim, accepted when at least
  // `separation` from every earlier mean.
  const double half = 2.0 * separation;
  const int max_attempts = 5000 * num_values;
  int attempts = 0;
  for (int v = 0; v < num_values;) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("place_factor_means: could not place " +
                               std::to_string(num_values) + " means at separation " +
                               std::to_string(separation) + " in dimension " +
                               std::to_string(dim));
    }
    Eigen::RowVectorXd candidate(dim);
    for (int j = 0; j < dim; ++j) candidate(j) = rng.uniform(-half, half);
    bool ok = true;
    for (int u = 0; u < v && ok; ++u) {
      ok = (candidate - means.row(u)).norm() >= separation;
    }
    if (ok) means.row(v++) = candidate;
  }
  return means;
}

namespace {

// Largest-remainder quotas of n * p_k: deterministic, sums to n exactly.
std::vector<int> quota_counts(const ProbVector& p, int n) {
  const int k = p.size();
  std::vector<int> counts(k);
  std::vector<std::pair<double, int>> remainders(k);
  int assigned = 0;
  for (int i = 0; i < k; ++i) {
    const double exact = p[i] * static_cast<double>(n);
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders[i] = {exact - std::floor(exact), i};
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int j = 0; j < n - assigned; ++j) counts[remainders[static_cast<std::size_t>(j)].second]++;
  return counts;
}

}  // namespace

SynthDataset gaussian_mixture(int classes, const PriorSpec& class_distribution, int n, int d,
                              double separation, double noise_sigma, std::uint64_t seed) {
  if (classes < 1) throw std::invalid_argument("gaussian_mixture: classes must be positive");
  if (n < classes) throw std::invalid_argument("gaussian_mixture: need at least one sample per class");
  if (d < 1) throw std::invalid_argument("gaussian_mixture: d must be positive");
  if (!(separation > 0.0)) throw std::invalid_argument("gaussian_mixture: separation must be > 0");
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("gaussian_mixture: noise_sigma must be > 0");

  Rng rng(seed);
  const Eigen::MatrixXd means = place_factor_means(classes, d, separation, rng);
  const std::vector<int> counts = quota_counts(build_prior(class_distribution, classes), n);

  SynthDataset out;
  out.X.resize(n, d);
  out.primary_labels.reserve(static_cast<std::size_t>(n));
  out.num_primary = classes;
  int row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (int j = 0; j < d; ++j) out.X(row, j) = means(c, j) + noise_sigma * rng.normal();
      out.primary_labels.push_back(c);
    }
  }
  return out;
}

SynthDataset two_factor_dataset(const FactorSpec& primary, const FactorSpec& secondary, int n,
                                std::uint64_t seed) {
  primary.validate();
  secondary.validate();
  if (n < 1) throw std::invalid_argument("two_factor_dataset: n must be positive");

  Rng rng(seed);
  const Eigen::MatrixXd means_p =
      place_factor_means(primary.num_values, primary.embedding_dim, primary.separation, rng);
  const Eigen::MatrixXd means_s =
      place_factor_means(secondary.num_values, secondary.embedding_dim, secondary.separation, rng);
  const ProbVector prior_p = build_prior(primary.distribution, primary.num_values);
  const ProbVector prior_s = build_prior(secondary.distribution, secondary.num_values);
  std::vector<double> weights_p(prior_p.values().data(), prior_p.values().data() + prior_p.size());
  std::vector<double> weights_s(prior_s.values().data(), prior_s.values().data() + prior_s.size());

  SynthDataset out;
  const int dp = primary.embedding_dim;
  const int ds = secondary.embedding_dim;
  out.X.resize(n, dp + ds);
  out.primary_labels.resize(static_cast<std::size_t>(n));
  out.secondary_labels.resize(static_cast<std::size_t>(n));
  out.num_primary = primary.num_values;
  out.num_secondary = secondary.num_values;
  for (int i = 0; i < n; ++i) {
    const int a = static_cast<int>(rng.sample_categorical(weights_p));
    const int b = static_cast<int>(rng.sample_categorical(weights_s));
    out.primary_labels[static_cast<std::size_t>(i)] = a;
    out.secondary_labels[static_cast<std::size_t>(i)] = b;
    for (int j = 0; j < dp; ++j) {
      out.X(i, j) = means_p(a, j) + primary.noise_sigma * rng.normal();
    }
    for (int j = 0; j < ds; ++j) {
      out.X(i, dp + j) = means_s(b, j) + secondary.noise_sigma * rng.normal();
    }
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> make_views(const Eigen::MatrixXd& x,
                                                       const ViewConfig& config,
                                                       std::uint64_t seed) {
  if (!(config.noise_sigma >= 0.0)) {
    throw std::invalid_argument("make_views: noise_sigma must be >= 0");
  }
  if (!(config.mask_fraction >= 0.0) || config.mask_fraction >= 1.0) {
    throw std::invalid_argument("make_views: mask_fraction must lie in [0, 1)");
  }
  Rng rng(seed);
  Eigen::MatrixXd anchor = x;
  Eigen::MatrixXd target = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      anchor(i, j) += config.noise_sigma * rng.normal();
    }
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      target(i, j) += config.noise_sigma * rng.normal();
    }
  }
  if (config.mask_fraction > 0.0) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (rng.uniform() < config.mask_fraction) anchor(i, j) = 0.0;
      }
    }
  }
  return {std::move(anchor), std::move(target)};
}

void save_csv(const SynthDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  out.precision(17);
  for (int j = 0; j < dataset.dim(); ++j) out << "x" << j << ",";
  out << "primary";
  const bool two_factor = dataset.num_secondary > 0;
  if (two_factor) out << ",secondary";
  out << "\n";
  for (int i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < dataset.dim(); ++j) out << dataset.X(i, j) << ",";
    out << dataset.primary_labels[static_cast<std::size_t>(i)];
    if (two_factor) out << "," << dataset.secondary_labels[static_cast<std::size_t>(i)];
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

namespace {

void write_i64(std::ofstream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int64_t read_i64(std::ifstream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_binary(const SynthDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_binary: cannot open " + path);
  write_i64(out, dataset.size());
  write_i64(out, dataset.dim());
  write_i64(out, dataset.num_primary);
  write_i64(out, dataset.num_secondary);
  for (int i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < dataset.dim(); ++j) {
      const double v = dataset.X(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  for (int label : dataset.primary_labels) write_i64(out, label);
  for (int label : dataset.secondary_labels) write_i64(out, label);
  if (!out) throw std::runtime_error("save_binary: write failed for " + path);
}

SynthDataset load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_binary: cannot open " + path);
  const std::int64_t n = read_i64(in);
  const std::int64_t d = read_i64(in);
  const std::int64_t num_primary = read_i64(in);
  const std::int64_t num_secondary = read_i64(in);
  if (!in || n < 0 || d < 1 || num_primary < 1 || num_secondary < 0) {
    throw std::runtime_error("load_binary: malformed header in " + path);
  }
  SynthDataset out;
  out.X.resize(n, d);
  out.num_primary = static_cast<int>(num_primary);
  out.num_secondary = static_cast<int>(num_secondary);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      out.X(i, j) = v;
    }
  }
  out.primary_labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    out.primary_labels[static_cast<std::size_t>(i)] = static_cast<int>(read_i64(in));
  }
  if (num_secondary > 0) {
    out.secondary_labels.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      out.secondary_labels[static_cast<std::size_t>(i)] = static_cast<int>(read_i64(in));
    }
  }
  if (!in) throw std::runtime_error("load_binary: truncated file " + path);
  return out;
}

}  // namespace priorlab
