#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seqdr/dgp.hpp"
#include "seqdr/pipeline.hpp"

namespace seqdr {

struct NamedEstimator {
  std::string name;
  EstimatorChoice choice;
};

struct StudyConfig {
  ScenarioSpec scenario;
  std::vector<NamedEstimator> estimators;
  int replications = 100;
  double level = 0.95;
  std::uint64_t base_seed = 1;
  int k_folds = 2;
  std::string output_path;
  int parallelism = 0;  // 0 = SEQDR_THREADS env var or hardware concurrency

  void validate() const;
};

struct EstimatorMetrics {
  std::string name;
  NuisanceFamily family = NuisanceFamily::MomentTargeted;
  int n_used = 0;
  int failures = 0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_ci_length = 0.0;
  double mean_sigma_hat = 0.0;
  double sd_theta_hat = 0.0;    // sample sd of theta across replications
  double se_mean_theta = 0.0;   // sd_theta_hat / sqrt(n_used)
  // Mean over replications of the per-fold-average l2 error of each stage
  // against the generating coefficients; meaningful where exact[] is set.
  std::array<double, 4> nuisance_l2{0, 0, 0, 0};
  std::array<bool, 4> nuisance_exact{false, false, false, false};
};

struct StudyResult {
  double theta_true = 0.0;
  double theta_mc_se = 0.0;
  int replications = 0;
  double level = 0.95;
  std::uint64_t base_seed = 0;
  int k_folds = 2;
  std::vector<EstimatorMetrics> estimators;
};

// Runs R replications: data for replication r is drawn with a seed derived
// only from (base_seed, r), every estimator shares that replication's data
// and fold plan, and a CI covers when it intersects
// [theta_true - 2 mc_se, theta_true + 2 mc_se]. Failed replications are
// excluded and counted; more than 10% failures for any estimator raises
// StudyError. The result is identical for any parallelism level.
StudyResult run_study(const StudyConfig& config);

struct ComparisonTable {
  std::vector<std::string> metrics;
  std::vector<std::string> estimators;
  std::vector<std::vector<double>> values;  // metrics x estimators
  std::vector<std::vector<double>> ratios;  // vs the first estimator
  std::vector<std::string> notes;

  std::string to_text() const;  // 6 significant digits
  std::string to_csv() const;
};

// Side-by-side metrics with ratios against the first estimator; notes flag
// estimators whose coverage leaves [0.91, 0.99] while another holds it.
ComparisonTable compare_estimators(const StudyResult& result);

// Human-readable per-estimator metric table for a single study.
std::string study_table_csv(const StudyResult& result);

}  // namespace seqdr
