#include <doctest.h>

#include <cmath>
#include <vector>

#include "priorlab/clustering.hpp"
#include "priorlab/rng.hpp"

using namespace priorlab;

namespace {

Eigen::MatrixXd random_points(Rng& rng, int n, int d, double scale = 1.0) {
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
  }
  return X;
}

Partition random_partition(Rng& rng, int n, int k) {
  std::vector<int> a(n);
  for (int i = 0; i < n; ++i) a[i] = static_cast<int>(rng.uniform_int(k));
  return Partition(std::move(a), k);
}

// The fixed four-point instance: two tight pairs far apart.
Eigen::MatrixXd four_points() {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 0, 2, 10, 0, 10, 2;
  return X;
}

}  // namespace

TEST_CASE("partition validation and counts") {
  CHECK_THROWS_AS(Partition({0, 1, 2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Partition({0, -1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Partition({}, 2), std::invalid_argument);
  const Partition p({0, 0, 1}, 3);
  CHECK(p.counts() == std::vector<int>{2, 1, 0});
}

TEST_CASE("objectives on the four-point instance") {
  const Eigen::MatrixXd X = four_points();
  const Partition p({0, 0, 1, 1}, 2);
  CHECK(explicit_kmeans_objective(X, p) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(implicit_kmeans_objective(X, p) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("objectives on a two-point cluster") {
  Eigen::MatrixXd X(2, 1);
  X << 0, 2;
  const Partition p({0, 0}, 1);
  // Centroid at 1, each point at squared distance 1.
  CHECK(explicit_kmeans_objective(X, p) == doctest::Approx(2.0).epsilon(1e-14));
  // Ordered pairs contribute |0-2|^2 twice, divided by 2*2.
  CHECK(implicit_kmeans_objective(X, p) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("explicit and implicit objectives agree on random partitions") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(11));
    const int d = 1 + static_cast<int>(rng.uniform_int(4));
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    const Eigen::MatrixXd X = random_points(rng, n, d, 3.0);
    const Partition p = random_partition(rng, n, k);
    const double a = explicit_kmeans_objective(X, p);
    const double b = implicit_kmeans_objective(X, p);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("objectives are invariant to cluster relabeling and point order") {
  Rng rng(22);
  const Eigen::MatrixXd X = random_points(rng, 9, 3);
  const Partition p = random_partition(rng, 9, 3);

  // Relabel clusters by the cycle 0->1->2->0.
  std::vector<int> relabeled(9);
  for (int i = 0; i < 9; ++i) relabeled[i] = (p[i] + 1) % 3;
  const Partition q(relabeled, 3);
  CHECK(explicit_kmeans_objective(X, p) ==
        doctest::Approx(explicit_kmeans_objective(X, q)).epsilon(1e-14));
  CHECK(implicit_kmeans_objective(X, p) ==
        doctest::Approx(implicit_kmeans_objective(X, q)).epsilon(1e-14));

  // Permute the points together with their assignments.
  std::vector<std::size_t> perm{3, 1, 4, 0, 8, 6, 2, 7, 5};
  Eigen::MatrixXd Xp(9, 3);
  std::vector<int> ap(9);
  for (int i = 0; i < 9; ++i) {
    Xp.row(i) = X.row(static_cast<int>(perm[i]));
    ap[i] = p[static_cast<int>(perm[i])];
  }
  CHECK(explicit_kmeans_objective(Xp, Partition(ap, 3)) ==
        doctest::Approx(explicit_kmeans_objective(X, p)).epsilon(1e-13));
}

TEST_CASE("brute force on the four-point instance") {
  const BruteForceResult r = brute_force_optimum(four_points(), 2, KmeansMode::Explicit);
  CHECK(r.objective == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.enumerated == 16);
  // The optimum groups the two left points against the two right points;
  // lexicographic tie-breaking labels the left pair 0.
  CHECK(r.partition.assignment() == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("brute force explicit and implicit optima coincide") {
  Rng rng(23);
  for (int t = 0; t < 25; ++t) {
    const int n = 4 + static_cast<int>(rng.uniform_int(5));  // 4..8
    const int k = 2 + static_cast<int>(rng.uniform_int(2));  // 2..3
    const Eigen::MatrixXd X = random_points(rng, n, 2, 2.0);
    const BruteForceResult e = brute_force_optimum(X, k, KmeansMode::Explicit);
    const BruteForceResult m = brute_force_optimum(X, k, KmeansMode::Implicit);
    CHECK(std::abs(e.objective - m.objective) <= 1e-9);
    // Each optimizer's partition attains the other's optimal value.
    CHECK(implicit_kmeans_objective(X, e.partition) <= m.objective + 1e-9);
    CHECK(explicit_kmeans_objective(X, m.partition) <= e.objective + 1e-9);
  }
}

TEST_CASE("a sign fault in the pair term breaks the equivalence") {
  // Deliberately faulty centroid-free objective: pair distances enter with a
  // negative sign.  The equivalence with the explicit optimum must not
  // survive this, otherwise the cross-check proves nothing.
  const ClusterObjectiveFn faulty = [](const Eigen::MatrixXd& X, const Partition& p) {
    return -implicit_kmeans_objective(X, p);
  };
  Rng rng(24);
  const Eigen::MatrixXd X = random_points(rng, 6, 2, 2.0);
  const BruteForceResult e = brute_force_optimum(X, 2, KmeansMode::Explicit);
  const BruteForceResult f = brute_force_optimum(X, 2, KmeansMode::Implicit, 4000000, faulty);
  CHECK(std::abs(e.objective - f.objective) > 1e-6);
}

TEST_CASE("brute force respects the enumeration cap") {
  Rng rng(25);
  const Eigen::MatrixXd X = random_points(rng, 16, 2);
  CHECK_THROWS_AS(brute_force_optimum(X, 3, KmeansMode::Explicit, 1000000),
                  std::invalid_argument);
}

TEST_CASE("lloyd with K = N reaches zero") {
  Rng rng(26);
  const Eigen::MatrixXd X = random_points(rng, 6, 2);
  const LloydResult r = lloyd(X, 6, LloydOptions{LloydInit::FirstK, 0, 100, 1e-10, 1});
  CHECK(r.objective == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(r.partition.counts() == std::vector<int>(6, 1));
}

TEST_CASE("lloyd recovers well-separated blobs and matches brute force") {
  Rng rng(27);
  Eigen::MatrixXd X(8, 2);
  for (int i = 0; i < 4; ++i) X.row(i) = Eigen::RowVector2d(-10.0, 0.0) + 0.1 * random_points(rng, 1, 2).row(0);
  for (int i = 4; i < 8; ++i) X.row(i) = Eigen::RowVector2d(+10.0, 0.0) + 0.1 * random_points(rng, 1, 2).row(0);
  const LloydResult r = lloyd(X, 2, LloydOptions{LloydInit::KMeansPlusPlus, 1, 100, 1e-10, 3});
  const BruteForceResult b = brute_force_optimum(X, 2, KmeansMode::Explicit);
  CHECK(r.objective == doctest::Approx(b.objective).epsilon(1e-9));
}

TEST_CASE("lloyd objective never beats brute force and never increases") {
  Rng rng(28);
  for (int t = 0; t < 15; ++t) {
    const int n = 5 + static_cast<int>(rng.uniform_int(4));
    const Eigen::MatrixXd X = random_points(rng, n, 2, 2.0);
    const LloydResult r = lloyd(X, 3, LloydOptions{LloydInit::KMeansPlusPlus, static_cast<std::uint64_t>(7 + t), 100, 1e-10, 1});
    const BruteForceResult b = brute_force_optimum(X, 3, KmeansMode::Explicit);
    CHECK(r.objective >= b.objective - 1e-9);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      CHECK(r.trace[i] <= r.trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("lloyd re-seeds emptied clusters") {
  // FirstK initialization with duplicated leading points forces an empty
  // cluster in the first assignment round.
  Eigen::MatrixXd X(5, 1);
  X << 0.0, 0.0, 5.0, 5.1, 10.0;
  const LloydResult r = lloyd(X, 2, LloydOptions{LloydInit::FirstK, 0, 100, 1e-10, 1});
  const std::vector<int> counts = r.partition.counts();
  CHECK(counts[0] >= 1);
  CHECK(counts[1] >= 1);
  CHECK(std::isfinite(r.objective));
}

TEST_CASE("lloyd is deterministic given a seed") {
  Rng rng(29);
  const Eigen::MatrixXd X = random_points(rng, 20, 3);
  const LloydResult a = lloyd(X, 4, LloydOptions{LloydInit::KMeansPlusPlus, 123, 100, 1e-10, 2});
  const LloydResult b = lloyd(X, 4, LloydOptions{LloydInit::KMeansPlusPlus, 123, 100, 1e-10, 2});
  CHECK(a.objective == b.objective);
  CHECK(a.partition.assignment() == b.partition.assignment());
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("adjusted rand index reference behavior") {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(adjusted_rand_index(a, a) == doctest::Approx(1.0));
  // Relabeling does not change the score.
  const std::vector<int> b{2, 2, 0, 0, 1, 1};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(1.0));
  // One point moved: strictly below 1.
  const std::vector<int> c{0, 0, 1, 1, 2, 1};
  CHECK(adjusted_rand_index(a, c) < 1.0);
  CHECK(adjusted_rand_index(a, c) > 0.0);
  // Independent labelings hover near zero.
  Rng rng(30);
  double total = 0.0;
  const int trials = 200;
  std::vector<int> x(60), y(60);
  for (int t = 0; t < trials; ++t) {
    for (auto& v : x) v = static_cast<int>(rng.uniform_int(3));
    for (auto& v : y) v = static_cast<int>(rng.uniform_int(3));
    total += adjusted_rand_index(x, y);
  }
  CHECK(std::abs(total / trials) < 0.02);
}
