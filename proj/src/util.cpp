#include "priorlab/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace priorlab {

double logsumexp(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw std::invalid_argument("logsumexp: empty vector");
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf, or a stray inf/nan propagates
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax: empty vector");
  const double m = logits.maxCoeff();
  // Scalar std::exp so extreme logit gaps underflow to an exact zero; Eigen's
  // vectorized exp clamps at the subnormal boundary instead, which would make
  // saturated cross-entropies silently finite.
  Eigen::VectorXd p(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) p(i) = std::exp(logits(i) - m);
  p /= p.sum();
  return p;
}

int thread_cap() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  const char* env = std::getenv("PRIOR_LAB_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  try {
    const int cap = std::stoi(std::string(env));
    if (cap >= 1) return std::min(cap, hw);
  } catch (const std::exception&) {
    // fall through: unparsable values leave the hardware default in place
  }
  return hw;
}

}  // namespace priorlab
