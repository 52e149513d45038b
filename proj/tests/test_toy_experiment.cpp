#include "priorlab/toy_experiment.hpp"

#include <stdexcept>

#include "doctest.h"
#include "json.hpp"

using priorlab::ToyExperimentConfig;
using priorlab::ToyExperimentReport;

namespace {

// Shrunk far below the calibrated operating point: these cases check the
// harness contract, not the training outcome.
ToyExperimentConfig smoke() {
  ToyExperimentConfig cfg;
  cfg.seeds = {1, 2, 3};
  cfg.dataset_size = 120;
  cfg.steps = 20;
  cfg.batch_size = 40;
  return cfg;
}

}  // namespace

TEST_CASE("toy experiment emits one row per seed with consistent diffs") {
  const ToyExperimentReport r = priorlab::run_toy_experiment(smoke());
  REQUIRE(r.rows.size() == 3);
  int wins = 0;
  for (const auto& row : r.rows) {
    CHECK(row.secondary_diff ==
          doctest::Approx(row.secondary_purity_b - row.secondary_purity_a).epsilon(1e-15));
    CHECK(row.primary_diff ==
          doctest::Approx(row.primary_purity_b - row.primary_purity_a).epsilon(1e-15));
    CHECK(row.secondary_purity_a >= 0.0);
    CHECK(row.secondary_purity_a <= 1.0);
    CHECK(row.kl_a >= 0.0);
    CHECK(row.kl_b >= 0.0);
    if (row.secondary_diff > 0.0) ++wins;
  }
  CHECK(r.wins_b == wins);
}

TEST_CASE("identical priors on both sides give exactly zero paired differences") {
  ToyExperimentConfig cfg = smoke();
  cfg.prior_b = cfg.prior_a;
  const ToyExperimentReport r = priorlab::run_toy_experiment(cfg);
  for (const auto& row : r.rows) {
    CHECK(row.secondary_diff == 0.0);
    CHECK(row.primary_diff == 0.0);
    CHECK(row.kl_a == row.kl_b);
  }
  CHECK(r.wins_b == 0);
  CHECK(r.median_secondary_diff == 0.0);
  CHECK(r.median_primary_diff == 0.0);
}

TEST_CASE("toy experiment is deterministic in its seeds") {
  const ToyExperimentReport a = priorlab::run_toy_experiment(smoke());
  const ToyExperimentReport b = priorlab::run_toy_experiment(smoke());
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].secondary_purity_a == b.rows[i].secondary_purity_a);
    CHECK(a.rows[i].secondary_purity_b == b.rows[i].secondary_purity_b);
    CHECK(a.rows[i].primary_purity_a == b.rows[i].primary_purity_a);
  }
}

TEST_CASE("median handles odd and even lengths") {
  CHECK(priorlab::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(priorlab::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(priorlab::median({5.0}) == 5.0);
  CHECK_THROWS_AS(priorlab::median({}), std::invalid_argument);
}

TEST_CASE("toy config validates and round-trips through json") {
  ToyExperimentConfig cfg = smoke();
  nlohmann::json j = cfg;
  const ToyExperimentConfig back = j.get<ToyExperimentConfig>();
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.dataset_size == cfg.dataset_size);
  CHECK(back.steps == cfg.steps);
  CHECK(back.lambda == cfg.lambda);
  CHECK(back.secondary.separation == cfg.secondary.separation);

  ToyExperimentConfig bad = smoke();
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = smoke();
  bad.batch_size = bad.dataset_size + 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
