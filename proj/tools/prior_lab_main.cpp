#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "priorlab/clustering.hpp"
#include "priorlab/prob.hpp"
#include "priorlab/props.hpp"
#include "priorlab/sampling.hpp"
#include "priorlab/synthdata.hpp"
#include "priorlab/toy_experiment.hpp"
#include "priorlab/trainer.hpp"
#include "priorlab/util.hpp"
#include "priorlab/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/**
 * Per-invocation bookkeeping: output directory, the resolved config, and the
 * paths written.  write_manifest records all of it; the output files
 * themselves are pure functions of (config, seed), so re-running a manifest's
 * command reproduces them byte for byte (only the manifest timestamps move).
 */
struct CommandContext {
  std::string command;
  fs::path out_dir;
  std::uint64_t seed = 0;
  json config;
  std::vector<std::string> outputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  fs::path reserve(const std::string& filename) {
    fs::create_directories(out_dir);
    fs::path p = out_dir / filename;
    outputs.push_back(p.string());
    return p;
  }

  void write_manifest() const {
    fs::create_directories(out_dir);
    const json manifest = {{"command", command},
                           {"config", config},
                           {"seed", seed},
                           {"tool_version", priorlab::kVersion},
                           {"started_at", iso_utc(started)},
                           {"finished_at", iso_utc(std::chrono::system_clock::now())},
                           {"outputs", outputs}};
    std::ofstream out(out_dir / (command + "-manifest.json"));
    out << manifest.dump(2) << "\n";
  }
};

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

priorlab::PriorSpec prior_from_flags(const std::string& kind, double tau,
                                     const std::vector<std::int64_t>& counts) {
  if (kind == "uniform") return priorlab::PriorSpec::uniform();
  if (kind == "power-law") return priorlab::PriorSpec::power_law(tau);
  if (kind == "empirical") {
    if (counts.empty())
      throw std::invalid_argument("empirical prior requires --counts with one count per cluster");
    return priorlab::PriorSpec::empirical(counts);
  }
  throw std::invalid_argument("unknown prior kind: " + kind);
}

// ---------------------------------------------------------------------------
// verify-props
// ---------------------------------------------------------------------------

int run_verify_props(const priorlab::PropsConfig& cfg, CommandContext& ctx, bool json_stdout) {
  ctx.config = cfg;
  const std::vector<priorlab::SuiteReport> suites = priorlab::run_all_suites(cfg);

  bool all_passed = true;
  for (const auto& s : suites) all_passed = all_passed && s.passed;

  const json report = {{"config", cfg}, {"suites", suites}, {"all_passed", all_passed}};
  write_json_file(ctx.reserve("verify-props-report.json"), report);
  ctx.write_manifest();

  if (json_stdout) {
    std::cout << report.dump(2) << "\n";
  } else {
    for (const auto& s : suites) {
      std::printf("suite %-12s %s  checks=%d worst_residual=%.3e\n", s.name.c_str(),
                  s.passed ? "PASS" : "FAIL", s.checks, s.worst_residual);
      for (const auto& f : s.failures) std::printf("  %s\n", f.c_str());
    }
    std::printf("%s\n", all_passed ? "all suites passed" : "verification FAILED");
  }
  return all_passed ? 0 : 1;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string prior_kind = "uniform";
  double tau = 0.5;
  std::vector<std::int64_t> counts;
  std::string alignment = "fixed";
  double lambda = 5.0;
  double sigma = 0.1;
  double sharpen_t = 0.25;
  int steps = 200;
  int batch_size = 32;
  double learning_rate = 0.05;
  int prototypes = 10;
  int embed_dim = 16;
  std::string encoder = "mlp";
  int hidden_width = 64;
  std::string dataset = "builtin:two-factor";
  int data_size = 1000;
  std::string report_path;  // empty: <out-dir>/train-report.json
};

int run_train(const TrainFlags& f, CommandContext& ctx, bool json_stdout) {
  priorlab::TrainerConfig cfg;
  cfg.loss.prior = prior_from_flags(f.prior_kind, f.tau, f.counts);
  if (f.alignment == "fixed") {
    cfg.loss.prior_alignment = priorlab::PriorAlignment::FixedIndex;
  } else if (f.alignment == "sorted") {
    cfg.loss.prior_alignment = priorlab::PriorAlignment::SortedDescending;
  } else {
    throw std::invalid_argument("unknown alignment: " + f.alignment);
  }
  cfg.loss.lambda = f.lambda;
  cfg.loss.sigma = f.sigma;
  cfg.loss.sharpen_T = f.sharpen_t;
  cfg.steps = f.steps;
  cfg.batch_size = f.batch_size;
  cfg.learning_rate = f.learning_rate;

  priorlab::SynthDataset data;
  if (f.dataset == "builtin:two-factor") {
    data = priorlab::two_factor_dataset(priorlab::default_primary_factor(),
                                        priorlab::default_secondary_factor(), f.data_size,
                                        ctx.seed + 17);
  } else {
    data = priorlab::load_binary(f.dataset);
  }

  const priorlab::EncoderKind kind = f.encoder == "linear" ? priorlab::EncoderKind::Linear
                                                           : priorlab::EncoderKind::OneHidden;
  priorlab::SiameseState state = priorlab::SiameseState::initialize(
      data.dim(), f.embed_dim, f.prototypes, cfg, ctx.seed, kind, f.hidden_width);

  priorlab::SamplerConfig sampler;
  sampler.strategy = priorlab::SamplingStrategy::UniformRandom;
  sampler.batch_size = f.batch_size;
  sampler.seed = ctx.seed + 1;

  ctx.config = {{"trainer", cfg},
                {"sampler", sampler},
                {"dataset", f.dataset},
                {"data_size", f.data_size},
                {"encoder", f.encoder},
                {"embed_dim", f.embed_dim},
                {"prototypes", f.prototypes},
                {"hidden_width", f.hidden_width}};

  const priorlab::TrainReport report = priorlab::train(data, state, sampler);

  const json report_json = {{"config", ctx.config}, {"report", report}};
  fs::path report_file;
  if (f.report_path.empty()) {
    report_file = ctx.reserve("train-report.json");
  } else {
    report_file = f.report_path;
    fs::create_directories(report_file.parent_path().empty() ? "." : report_file.parent_path());
    ctx.outputs.push_back(report_file.string());
  }
  write_json_file(report_file, report_json);
  ctx.write_manifest();

  if (json_stdout) {
    std::cout << report_json.dump(2) << "\n";
  } else {
    std::printf("trained %d steps: loss %s -> %s\n", cfg.steps,
                format_double(report.loss_series.front()).c_str(),
                format_double(report.loss_series.back()).c_str());
    std::printf("primary purity %.4f  secondary purity %.4f  KL(pbar||prior) %.6f\n",
                report.metrics.nn_purity_primary, report.metrics.nn_purity_secondary,
                report.metrics.kl_pbar_to_prior);
    std::printf("report: %s\n", report_file.string().c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// toy-experiment
// ---------------------------------------------------------------------------

struct ToyFlags {
  std::string prior_a = "uniform";
  double tau_a = 0.5;
  std::string prior_b = "power-law";
  double tau_b = 0.5;
  int num_seeds = 5;
  int steps = 3000;
  int dataset_size = 1500;
  int batch_size = 300;
  double lambda = 15.0;
  double learning_rate = 0.05;
  int embed_dim = 16;
};

int run_toy(const ToyFlags& f, CommandContext& ctx, bool json_stdout) {
  priorlab::ToyExperimentConfig cfg;
  cfg.prior_a = prior_from_flags(f.prior_a, f.tau_a, {});
  cfg.prior_b = prior_from_flags(f.prior_b, f.tau_b, {});
  cfg.seeds.clear();
  for (int s = 1; s <= f.num_seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  cfg.steps = f.steps;
  cfg.dataset_size = f.dataset_size;
  cfg.batch_size = f.batch_size;
  cfg.lambda = f.lambda;
  cfg.learning_rate = f.learning_rate;
  cfg.embed_dim = f.embed_dim;
  cfg.validate();
  ctx.config = cfg;

  const priorlab::ToyExperimentReport report = priorlab::run_toy_experiment(cfg);

  std::ofstream csv(ctx.reserve("toy-experiment-rows.csv"));
  csv << "seed,secondary_purity_a,secondary_purity_b,secondary_diff,"
         "primary_purity_a,primary_purity_b,primary_diff,kl_a,kl_b\n";
  for (const auto& row : report.rows) {
    csv << row.seed << ',' << format_double(row.secondary_purity_a) << ','
        << format_double(row.secondary_purity_b) << ',' << format_double(row.secondary_diff)
        << ',' << format_double(row.primary_purity_a) << ','
        << format_double(row.primary_purity_b) << ',' << format_double(row.primary_diff) << ','
        << format_double(row.kl_a) << ',' << format_double(row.kl_b) << '\n';
  }
  csv.close();

  const json report_json = {{"config", cfg}, {"report", report}};
  write_json_file(ctx.reserve("toy-experiment-report.json"), report_json);
  ctx.write_manifest();

  if (json_stdout) {
    std::cout << report_json.dump(2) << "\n";
  } else {
    for (const auto& row : report.rows) {
      std::printf("seed %" PRIu64 ": secondary %.4f vs %.4f (diff %+.4f)  primary diff %+.4f\n",
                  row.seed, row.secondary_purity_a, row.secondary_purity_b, row.secondary_diff,
                  row.primary_diff);
    }
    std::printf("wins_b=%d/%zu  median secondary diff %+.4f  median primary diff %+.4f\n",
                report.wins_b, report.rows.size(), report.median_secondary_diff,
                report.median_primary_diff);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// kmeans-demo
// ---------------------------------------------------------------------------

struct KmeansFlags {
  int classes = 2;
  int n = 12;
  int dim = 2;
  double separation = 2.6;
  double noise = 1.0;
  double tau = 1.5;
  int restarts = 1;
};

void write_points_csv(const fs::path& path, const priorlab::SynthDataset& data,
                      const std::vector<int>& clusters) {
  std::ofstream csv(path);
  for (int j = 0; j < data.dim(); ++j) csv << 'x' << j << ',';
  csv << "label,cluster\n";
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) csv << format_double(data.X(i, j)) << ',';
    csv << data.primary_labels[static_cast<std::size_t>(i)] << ','
        << clusters[static_cast<std::size_t>(i)] << '\n';
  }
}

int run_kmeans_demo(const KmeansFlags& f, CommandContext& ctx, bool json_stdout) {
  ctx.config = {{"classes", f.classes}, {"n", f.n},         {"dim", f.dim},
                {"separation", f.separation}, {"noise", f.noise}, {"tau", f.tau},
                {"restarts", f.restarts}};

  priorlab::LloydOptions opts;
  opts.seed = ctx.seed;
  opts.restarts = f.restarts;

  const priorlab::SynthDataset imb = priorlab::gaussian_mixture(
      f.classes, priorlab::PriorSpec::power_law(f.tau), f.n, f.dim, f.separation, f.noise,
      ctx.seed);
  const priorlab::SynthDataset uni = priorlab::gaussian_mixture(
      f.classes, priorlab::PriorSpec::uniform(), f.n, f.dim, f.separation, f.noise, ctx.seed);

  const priorlab::LloydResult r_imb = priorlab::lloyd(imb.X, f.classes, opts);
  const priorlab::LloydResult r_uni = priorlab::lloyd(uni.X, f.classes, opts);

  const double ari_imb =
      priorlab::adjusted_rand_index(imb.primary_labels, r_imb.partition.assignment());
  const double ari_uni =
      priorlab::adjusted_rand_index(uni.primary_labels, r_uni.partition.assignment());

  write_points_csv(ctx.reserve("kmeans-demo-imbalanced.csv"), imb, r_imb.partition.assignment());
  write_points_csv(ctx.reserve("kmeans-demo-uniform.csv"), uni, r_uni.partition.assignment());

  const json summary = {{"config", ctx.config},
                        {"ari_imbalanced", ari_imb},
                        {"ari_uniform", ari_uni},
                        {"objective_imbalanced", r_imb.objective},
                        {"objective_uniform", r_uni.objective}};
  write_json_file(ctx.reserve("kmeans-demo-summary.json"), summary);
  ctx.write_manifest();

  if (json_stdout) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::printf("imbalanced classes (power-law tau=%.2f): ARI %.4f\n", f.tau, ari_imb);
    std::printf("uniform classes:                         ARI %.4f\n", ari_uni);
    std::printf("(--seed 5 --separation 2.6 shows the heavy-class split: ARI 0.20 vs 1.00)\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sample-audit
// ---------------------------------------------------------------------------

struct AuditFlags {
  std::string strategy = "balanced";
  int classes_per_batch = 0;  // 0: strategy default
  int batch_size = 8;
  std::int64_t iterations = 100000;
  int classes = 4;
  int per_class = 8;
};

int run_sample_audit(const AuditFlags& f, CommandContext& ctx, bool json_stdout) {
  priorlab::SamplerConfig cfg;
  if (f.strategy == "uniform") {
    cfg.strategy = priorlab::SamplingStrategy::UniformRandom;
  } else if (f.strategy == "balanced") {
    cfg.strategy = priorlab::SamplingStrategy::ClassBalanced;
  } else if (f.strategy == "imbalanced") {
    cfg.strategy = priorlab::SamplingStrategy::ClassImbalanced;
  } else if (f.strategy == "inverse-sqrt") {
    cfg.strategy = priorlab::SamplingStrategy::InverseSqrtFreq;
  } else {
    throw std::invalid_argument("unknown strategy: " + f.strategy);
  }
  cfg.batch_size = f.batch_size;
  cfg.classes_per_batch = f.classes_per_batch;
  if (cfg.classes_per_batch == 0) {
    // Strategy defaults: many classes with quota 1, or few classes with a
    // large quota, per the two stratified regimes.
    if (cfg.strategy == priorlab::SamplingStrategy::ClassBalanced)
      cfg.classes_per_batch = std::min(f.classes, f.batch_size);
    if (cfg.strategy == priorlab::SamplingStrategy::ClassImbalanced) cfg.classes_per_batch = 2;
  }
  cfg.seed = ctx.seed;

  std::vector<priorlab::LabeledIndex> dataset;
  for (int c = 0; c < f.classes; ++c) {
    for (int i = 0; i < f.per_class; ++i)
      dataset.push_back({static_cast<std::int64_t>(dataset.size()), c});
  }

  ctx.config = {{"sampler", cfg},
                {"classes", f.classes},
                {"per_class", f.per_class},
                {"iterations", f.iterations}};

  const priorlab::MarginalAudit audit =
      priorlab::empirical_marginal_audit(cfg, dataset, f.iterations);
  const double se = std::sqrt(audit.closed_form * (1.0 - audit.closed_form) /
                              static_cast<double>(audit.iterations));

  std::ofstream csv(ctx.reserve("sample-audit-frequencies.csv"));
  csv << "index,class,frequency,closed_form,abs_deviation\n";
  for (std::size_t i = 0; i < audit.frequency.size(); ++i) {
    csv << i << ',' << dataset[i].class_id << ',' << format_double(audit.frequency[i]) << ','
        << format_double(audit.closed_form) << ','
        << format_double(std::abs(audit.frequency[i] - audit.closed_form)) << '\n';
  }
  csv.close();

  const json summary = {{"config", ctx.config},
                        {"closed_form", audit.closed_form},
                        {"max_abs_deviation", audit.max_abs_deviation},
                        {"binomial_se", se},
                        {"deviation_over_se", se > 0.0 ? audit.max_abs_deviation / se : 0.0},
                        {"iterations", audit.iterations}};
  write_json_file(ctx.reserve("sample-audit-summary.json"), summary);
  ctx.write_manifest();

  if (json_stdout) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::printf("closed-form marginal %.6f  max deviation %.6f (%.2f binomial SEs, %" PRId64
                " iterations)\n",
                audit.closed_form, audit.max_abs_deviation,
                se > 0.0 ? audit.max_abs_deviation / se : 0.0, audit.iterations);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataFlags {
  std::string kind = "gaussian";
  int classes = 10;
  int n = 1000;
  int dim = 16;
  double separation = 1.0;
  double noise = 0.3;
  std::string prior_kind = "uniform";
  double tau = 1.5;
  std::string format = "csv";
  std::string name = "dataset";
};

int run_gen_data(const GenDataFlags& f, CommandContext& ctx, bool json_stdout) {
  priorlab::SynthDataset data;
  if (f.kind == "gaussian") {
    data = priorlab::gaussian_mixture(f.classes, prior_from_flags(f.prior_kind, f.tau, {}), f.n,
                                      f.dim, f.separation, f.noise, ctx.seed);
  } else if (f.kind == "two-factor") {
    data = priorlab::two_factor_dataset(priorlab::default_primary_factor(),
                                        priorlab::default_secondary_factor(), f.n, ctx.seed);
  } else {
    throw std::invalid_argument("unknown dataset kind: " + f.kind);
  }

  ctx.config = {{"kind", f.kind},           {"classes", f.classes},
                {"n", f.n},                 {"dim", f.dim},
                {"separation", f.separation}, {"noise", f.noise},
                {"prior", f.prior_kind},      {"tau", f.tau},
                {"format", f.format},         {"name", f.name}};

  if (f.format == "csv" || f.format == "both")
    priorlab::save_csv(data, ctx.reserve(f.name + ".csv").string());
  if (f.format == "binary" || f.format == "both")
    priorlab::save_binary(data, ctx.reserve(f.name + ".bin").string());
  if (f.format != "csv" && f.format != "binary" && f.format != "both")
    throw std::invalid_argument("unknown format: " + f.format);
  ctx.write_manifest();

  const json summary = {{"rows", data.size()}, {"dim", data.dim()}};
  if (json_stdout) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::printf("wrote %d x %d dataset (%s)\n", data.size(), data.dim(), f.kind.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(priorlab::thread_cap());

  CLI::App app{"Cluster-prior laboratory: K-means views of self-supervised objectives"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed/--out-dir/--json appear after the subcommand

  std::uint64_t seed = 12345;
  std::string out_dir = ".";
  bool json_stdout = false;
  app.add_option("--seed", seed, "Seed for every stochastic component")->capture_default_str();
  app.add_option("--out-dir", out_dir, "Directory for outputs and the run manifest")
      ->capture_default_str();
  app.add_flag("--json", json_stdout, "Print the machine-readable report to stdout");

  priorlab::PropsConfig props_cfg;
  CLI::App* verify = app.add_subcommand("verify-props", "Run the four verification suites");
  verify->add_option("--trials", props_cfg.trials, "Base instance count per suite")
      ->check(CLI::Range(1, 10000))
      ->capture_default_str();
  verify->add_option("--max-n", props_cfg.max_points, "Largest brute-force instance size")
      ->check(CLI::Range(4, 10))
      ->capture_default_str();
  verify->add_option("--max-k", props_cfg.max_clusters, "Largest brute-force cluster count")
      ->check(CLI::Range(2, 4))
      ->capture_default_str();

  TrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Train the toy Siamese model once");
  train->add_option("--prior", train_flags.prior_kind, "uniform | power-law | empirical")
      ->check(CLI::IsMember({"uniform", "power-law", "empirical"}))
      ->capture_default_str();
  train->add_option("--tau", train_flags.tau, "Power-law decay exponent")->capture_default_str();
  train->add_option("--counts", train_flags.counts, "Empirical prior counts, one per cluster");
  train->add_option("--alignment", train_flags.alignment, "fixed | sorted prior alignment")
      ->check(CLI::IsMember({"fixed", "sorted"}))
      ->capture_default_str();
  train->add_option("--lambda", train_flags.lambda, "Prior-matching weight")
      ->capture_default_str();
  train->add_option("--sigma", train_flags.sigma, "Posterior temperature")->capture_default_str();
  train->add_option("--sharpen-t", train_flags.sharpen_t, "Target sharpening exponent")
      ->capture_default_str();
  train->add_option("--steps", train_flags.steps, "Optimizer steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--batch-size", train_flags.batch_size, "Samples per step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--lr", train_flags.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--prototypes", train_flags.prototypes, "Number of prototypes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--embed-dim", train_flags.embed_dim, "Embedding dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--encoder", train_flags.encoder, "mlp | linear")
      ->check(CLI::IsMember({"mlp", "linear"}))
      ->capture_default_str();
  train->add_option("--hidden-width", train_flags.hidden_width, "Hidden width of the mlp encoder")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--dataset", train_flags.dataset,
                    "builtin:two-factor or a path written by gen-data --format binary")
      ->capture_default_str();
  train->add_option("--data-size", train_flags.data_size, "Sample count for the builtin dataset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--report", train_flags.report_path,
                    "Report path (default <out-dir>/train-report.json)");

  ToyFlags toy_flags;
  CLI::App* toy = app.add_subcommand("toy-experiment", "Paired prior comparison over seeds");
  toy->add_option("--prior-a", toy_flags.prior_a, "Side A prior kind")
      ->check(CLI::IsMember({"uniform", "power-law"}))
      ->capture_default_str();
  toy->add_option("--tau-a", toy_flags.tau_a, "Side A power-law exponent")->capture_default_str();
  toy->add_option("--prior-b", toy_flags.prior_b, "Side B prior kind")
      ->check(CLI::IsMember({"uniform", "power-law"}))
      ->capture_default_str();
  toy->add_option("--tau-b", toy_flags.tau_b, "Side B power-law exponent")->capture_default_str();
  toy->add_option("--seeds", toy_flags.num_seeds, "Paired seeds 1..N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  toy->add_option("--steps", toy_flags.steps, "Optimizer steps per run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  toy->add_option("--n", toy_flags.dataset_size, "Dataset size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  toy->add_option("--batch-size", toy_flags.batch_size, "Samples per step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  toy->add_option("--lambda", toy_flags.lambda, "Prior-matching weight")->capture_default_str();
  toy->add_option("--lr", toy_flags.learning_rate, "Learning rate")->capture_default_str();
  toy->add_option("--embed-dim", toy_flags.embed_dim, "Embedding dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  KmeansFlags km_flags;
  CLI::App* km = app.add_subcommand("kmeans-demo",
                                    "Cluster imbalanced vs uniform blobs with the same seed");
  km->add_option("--classes", km_flags.classes, "Number of classes and clusters")
      ->check(CLI::Range(2, 16))
      ->capture_default_str();
  km->add_option("--n", km_flags.n, "Sample count")->check(CLI::PositiveNumber)
      ->capture_default_str();
  km->add_option("--dim", km_flags.dim, "Dimensions")->check(CLI::PositiveNumber)
      ->capture_default_str();
  km->add_option("--separation", km_flags.separation, "Class mean separation")
      ->capture_default_str();
  km->add_option("--noise", km_flags.noise, "Isotropic noise sigma")->capture_default_str();
  km->add_option("--tau", km_flags.tau, "Power-law exponent of the imbalanced side")
      ->capture_default_str();
  km->add_option("--restarts", km_flags.restarts, "Lloyd restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  AuditFlags audit_flags;
  CLI::App* audit = app.add_subcommand("sample-audit",
                                       "Empirical vs closed-form batch marginals");
  audit->add_option("--strategy", audit_flags.strategy,
                    "uniform | balanced | imbalanced | inverse-sqrt")
      ->check(CLI::IsMember({"uniform", "balanced", "imbalanced", "inverse-sqrt"}))
      ->capture_default_str();
  audit->add_option("--classes-per-batch", audit_flags.classes_per_batch,
                    "Distinct classes drawn per batch (0: strategy default)")
      ->capture_default_str();
  audit->add_option("--batch-size", audit_flags.batch_size, "Ids per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  audit->add_option("--iterations", audit_flags.iterations, "Batches to draw")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  audit->add_option("--classes", audit_flags.classes, "Class count of the audited dataset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  audit->add_option("--per-class", audit_flags.per_class, "Samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenDataFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset to disk");
  gen->add_option("--kind", gen_flags.kind, "gaussian | two-factor")
      ->check(CLI::IsMember({"gaussian", "two-factor"}))
      ->capture_default_str();
  gen->add_option("--classes", gen_flags.classes, "Class count (gaussian)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--n", gen_flags.n, "Sample count")->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--dim", gen_flags.dim, "Dimensions (gaussian)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--separation", gen_flags.separation, "Class mean separation (gaussian)")
      ->capture_default_str();
  gen->add_option("--noise", gen_flags.noise, "Isotropic noise sigma (gaussian)")
      ->capture_default_str();
  gen->add_option("--prior", gen_flags.prior_kind, "Class distribution: uniform | power-law")
      ->check(CLI::IsMember({"uniform", "power-law"}))
      ->capture_default_str();
  gen->add_option("--tau", gen_flags.tau, "Power-law exponent")->capture_default_str();
  gen->add_option("--format", gen_flags.format, "csv | binary | both")
      ->check(CLI::IsMember({"csv", "binary", "both"}))
      ->capture_default_str();
  gen->add_option("--name", gen_flags.name, "Output basename")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CommandContext ctx;
  ctx.out_dir = out_dir;
  ctx.seed = seed;
  props_cfg.seed = seed;

  try {
    if (verify->parsed()) {
      ctx.command = "verify-props";
      return run_verify_props(props_cfg, ctx, json_stdout);
    }
    if (train->parsed()) {
      ctx.command = "train";
      return run_train(train_flags, ctx, json_stdout);
    }
    if (toy->parsed()) {
      ctx.command = "toy-experiment";
      return run_toy(toy_flags, ctx, json_stdout);
    }
    if (km->parsed()) {
      ctx.command = "kmeans-demo";
      return run_kmeans_demo(km_flags, ctx, json_stdout);
    }
    if (audit->parsed()) {
      ctx.command = "sample-audit";
      return run_sample_audit(audit_flags, ctx, json_stdout);
    }
    if (gen->parsed()) {
      ctx.command = "gen-data";
      return run_gen_data(gen_flags, ctx, json_stdout);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
