#include "priorlab/prob.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace priorlab {

namespace {

void validate(const Eigen::VectorXd& p) {
  if (p.size() < 1) throw std::invalid_argument("ProbVector: needs at least one entry");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0)) {  // also rejects NaN
      throw std::invalid_argument("ProbVector: entry " + std::to_string(i) +
                                  " is negative or not finite");
    }
  }
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > ProbVector::kSumTolerance) {
    throw std::invalid_argument("ProbVector: entries sum to " + std::to_string(sum) +
                                ", not 1 within tolerance");
  }
}

}  // namespace

ProbVector::ProbVector(Eigen::VectorXd p) : p_(std::move(p)) { validate(p_); }

ProbVector::ProbVector(const std::vector<double>& p)
    : ProbVector(Eigen::Map<const Eigen::VectorXd>(p.data(),
                                                   static_cast<Eigen::Index>(p.size()))) {}

ProbVector ProbVector::uniform(int k) {
  if (k < 1) throw std::invalid_argument("ProbVector::uniform: k must be >= 1");
  return ProbVector(Eigen::VectorXd::Constant(k, 1.0 / k));
}

ProbVector ProbVector::one_hot(int k, int index) {
  if (k < 1) throw std::invalid_argument("ProbVector::one_hot: k must be >= 1");
  if (index < 0 || index >= k) throw std::invalid_argument("ProbVector::one_hot: index out of range");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(k);
  p(index) = 1.0;
  return ProbVector(std::move(p));
}

ProbVector ProbVector::normalized(Eigen::VectorXd weights) {
  if (weights.size() < 1) throw std::invalid_argument("ProbVector::normalized: empty weights");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) >= 0.0)) {
      throw std::invalid_argument("ProbVector::normalized: negative weight at index " +
                                  std::to_string(i));
    }
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw std::invalid_argument("ProbVector::normalized: weights sum to zero");
  weights /= total;
  // One more pass in case the division left the sum a few ulps off.
  weights /= weights.sum();
  return ProbVector(std::move(weights));
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double v = p[i];
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double cross_entropy(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("cross_entropy: size mismatch");
  }
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) {
        throw std::domain_error("cross_entropy: q has zero mass at index " + std::to_string(i) +
                                " where p is positive; value would be infinite");
      }
      h -= p[i] * std::log(q[i]);
    }
  }
  return h;
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: size mismatch");
  }
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) {
        throw std::domain_error("kl_divergence: q has zero mass at index " + std::to_string(i) +
                                " where p is positive; divergence would be infinite");
      }
      d += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
  }
  return d;
}

PriorSpec PriorSpec::uniform() { return PriorSpec{Kind::Uniform, 0.0, {}}; }

PriorSpec PriorSpec::power_law(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("PriorSpec::power_law: tau must be positive and finite");
  }
  return PriorSpec{Kind::PowerLaw, tau, {}};
}

PriorSpec PriorSpec::empirical(std::vector<std::int64_t> counts) {
  if (counts.empty()) throw std::invalid_argument("PriorSpec::empirical: counts are empty");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 1) {
      throw std::invalid_argument("PriorSpec::empirical: count at index " + std::to_string(i) +
                                  " is < 1");
    }
  }
  return PriorSpec{Kind::Empirical, 0.0, std::move(counts)};
}

ProbVector build_prior(const PriorSpec& spec, int k) {
  if (k < 1) throw std::invalid_argument("build_prior: k must be >= 1");
  switch (spec.kind) {
    case PriorSpec::Kind::Uniform:
      return ProbVector::uniform(k);
    case PriorSpec::Kind::PowerLaw: {
      if (!(spec.tau > 0.0)) throw std::invalid_argument("build_prior: power-law tau must be > 0");
      Eigen::VectorXd w(k);
      for (int i = 0; i < k; ++i) w(i) = std::pow(static_cast<double>(i + 1), -spec.tau);
      return ProbVector::normalized(std::move(w));
    }
    case PriorSpec::Kind::Empirical: {
      if (static_cast<int>(spec.counts.size()) != k) {
        throw std::invalid_argument("build_prior: empirical counts have length " +
                                    std::to_string(spec.counts.size()) + ", expected " +
                                    std::to_string(k));
      }
      Eigen::VectorXd w(k);
      for (int i = 0; i < k; ++i) {
        if (spec.counts[i] < 1) {
          throw std::invalid_argument("build_prior: empirical count at index " +
                                      std::to_string(i) + " is < 1");
        }
        w(i) = static_cast<double>(spec.counts[i]);
      }
      return ProbVector::normalized(std::move(w));
    }
  }
  throw std::logic_error("build_prior: unknown prior kind");
}

void to_json(nlohmann::json& j, const PriorSpec& spec) {
  switch (spec.kind) {
    case PriorSpec::Kind::Uniform:
      j = nlohmann::json{{"kind", "uniform"}};
      break;
    case PriorSpec::Kind::PowerLaw:
      j = nlohmann::json{{"kind", "power_law"}, {"tau", spec.tau}};
      break;
    case PriorSpec::Kind::Empirical:
      j = nlohmann::json{{"kind", "empirical"}, {"counts", spec.counts}};
      break;
  }
}

void from_json(const nlohmann::json& j, PriorSpec& spec) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") {
    spec = PriorSpec::uniform();
  } else if (kind == "power_law") {
    spec = PriorSpec::power_law(j.at("tau").get<double>());
  } else if (kind == "empirical") {
    spec = PriorSpec::empirical(j.at("counts").get<std::vector<std::int64_t>>());
  } else {
    throw std::invalid_argument("PriorSpec: unknown kind \"" + kind + "\"");
  }
}

}  // namespace priorlab
