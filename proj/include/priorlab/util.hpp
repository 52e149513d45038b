#pragma once

#include <Eigen/Core>

namespace priorlab {

/// Numerically stable log(sum(exp(v))).
double logsumexp(const Eigen::VectorXd& v);

/// Stable softmax; output entries are strictly positive and sum to 1 exactly
/// up to one final renormalization.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Parallelism cap: min(PRIOR_LAB_THREADS, hardware threads), at least 1.
/// PRIOR_LAB_THREADS unset or unparsable means "no extra cap".
int thread_cap();

}  // namespace priorlab
