#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "seqdr/dataset.hpp"
#include "seqdr/solver.hpp"

namespace seqdr {

// K-fold split plus, for each fold, the 4-way disjoint partition of the
// complement into the gamma/delta/alpha/beta fitting groups. Fully
// reconstructible from (n, k_folds, seed).
struct CrossFitPlan {
  int n = 0;
  int k_folds = 2;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;                            // length n
  std::vector<std::vector<int>> folds;                 // per fold, row indices
  std::vector<std::array<std::vector<int>, 4>> groups; // per fold, 4 subsamples
};

// Deterministic shuffle by seed. Folds differ in size by at most one; within
// each complement the four groups are disjoint, cover it, and differ in size
// by at most one (leftover indices are dealt round-robin). Requires
// n >= 8*k_folds so every group is nonempty.
CrossFitPlan make_plan(int n, int k_folds, std::uint64_t seed);

enum class NuisanceFamily { MomentTargeted, Baseline };

struct EstimatorChoice {
  NuisanceFamily family = NuisanceFamily::MomentTargeted;
  // Scale constants for the per-stage penalty c*sqrt(log(dim)/M), in the fit
  // order gamma, delta, alpha, beta. The exponential-type stages default to
  // a larger constant than the quadratic ones.
  std::array<double, 4> lambda_scales{1.0, 1.0, 0.5, 0.5};
  OverlapConfig overlap;
  SolverConfig solver;
  // Optional grid of scale multipliers; when nonempty each stage picks its
  // scale by an 80/20 holdout within its own subsample, then refits.
  std::vector<double> lambda_grid;
  bool strict = false;  // turn non-convergence warnings into errors

  void validate() const;
};

struct StageFit {
  double lambda = 0.0;
  int iterations = 0;
  double kkt_violation = 0.0;
  bool converged = false;
  bool saturated = false;
};

struct FittedNuisance {
  NuisanceParams eta;
  std::array<StageFit, 4> stages;  // gamma, delta, alpha, beta
};

// Fits the fold's nuisance quadruple in the strict order gamma -> delta ->
// alpha -> beta on the four disjoint groups of the fold's complement.
// Throws DegenerateSubsampleError when a group lacks the treated rows its
// loss needs (message names fold, stage, and counts).
FittedNuisance fit_nuisances(const Dataset& data, const CrossFitPlan& plan,
                             int fold_k, const EstimatorChoice& choice);

struct Diagnostics {
  int clipped = 0;             // propensity values clipped while scoring
  int nonconverged_stages = 0;
  int saturated_evals = 0;     // stages whose loss hit the linear-predictor cap
  bool sigma_degenerate = false;
};

struct EstimateReport {
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  int n = 0;
  int k_folds = 0;
  std::uint64_t seed = 0;
  TreatmentPath path;
  std::optional<TreatmentPath> control_path;  // set by estimate_dte
  NuisanceFamily family = NuisanceFamily::MomentTargeted;
  std::vector<FittedNuisance> per_fold;
  Eigen::VectorXd score_values;  // per-observation psi (or psi differences)
  Diagnostics diagnostics;
};

// Cross-fitted counterfactual-mean estimate for the given path:
// theta = mean of the fold-out-of-sample scores, sigma^2 their plain
// variance, CI = theta +- z_{(1+level)/2} sigma / sqrt(N).
EstimateReport estimate(const Dataset& data, const TreatmentPath& path,
                        const EstimatorChoice& choice, const CrossFitPlan& plan,
                        double level = 0.95);

// Difference of two counterfactual means on shared folds. The variance comes
// from the per-observation score differences.
EstimateReport estimate_dte(const Dataset& data, const TreatmentPath& treat,
                            const TreatmentPath& control,
                            const EstimatorChoice& choice,
                            const CrossFitPlan& plan, double level = 0.95);

}  // namespace seqdr
