#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "seqdr/dataset.hpp"

namespace seqdr {

// Logistic link g(u) = exp(u)/(1+exp(u)), evaluated in the branch form that
// never overflows. Throws std::invalid_argument on non-finite input.
double logistic(double u);

// Uncentered doubly robust score for one observation,
//   psi = s1'beta + a1 (sbar2'alpha - s1'beta) / g(s1'gamma)
//       + a1 a2 (y - sbar2'alpha) / {g(s1'gamma) g(sbar2'delta)},
// where sbar2 = (s1, s2) and (a1, a2) are first relabeled to the requested
// path. With clipping enabled, both g-values are clipped into
// [c0, 1-c0] before any division. With clipping disabled, a division by an
// exactly-zero propensity throws NumericalDegeneracyError naming row_index.
double score(double y, int a1, int a2, const Eigen::RowVectorXd& s1_row,
             const Eigen::RowVectorXd& s2_row, const NuisanceParams& eta,
             const TreatmentPath& path, const OverlapConfig& overlap,
             int row_index = -1);

struct ScoredDataset {
  Eigen::VectorXd values;  // per-observation psi
  int clipped = 0;         // propensity evaluations clipped into [c0, 1-c0]
};

// Vectorized score over every row of `data`.
ScoredDataset score_dataset(const Dataset& data, const NuisanceParams& eta,
                            const TreatmentPath& path,
                            const OverlapConfig& overlap);

// Function-level truth for a two-stage DGP, used to probe the doubly robust
// representation directly (test support).
struct DrTruth {
  int d1 = 2;  // including the constant column
  int d2 = 1;
  std::function<double(const Eigen::VectorXd& s1)> pi;
  std::function<double(const Eigen::VectorXd& s1, const Eigen::VectorXd& s2)> rho;
  std::function<double(const Eigen::VectorXd& s1, const Eigen::VectorXd& s2)> nu;
  // Conditional mean of S2 given S1 under a1 = 1.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& s1)> s2_mean;
  double s2_sd = 1.0;
  double noise_sd = 1.0;
};

// Working nuisance functions plugged into the functional score.
struct DrWorking {
  std::function<double(const Eigen::VectorXd& s1)> pi;
  std::function<double(const Eigen::VectorXd& s1, const Eigen::VectorXd& s2)> rho;
  std::function<double(const Eigen::VectorXd& s1, const Eigen::VectorXd& s2)> nu;
  std::function<double(const Eigen::VectorXd& s1)> mu;
};

struct DrCheckResult {
  double estimate;  // Monte Carlo estimate of E[psi] - theta_{1,1}
  double mc_se;     // standard error of the estimate
};

// Simulates n_mc draws from the truth, evaluates the functional score with
// the working models, and returns mean(psi) - mean(Y(1,1)) together with the
// Monte Carlo standard error of that difference.
DrCheckResult dr_representation_check(const DrTruth& truth,
                                      const DrWorking& working, long n_mc,
                                      std::uint64_t seed);

}  // namespace seqdr
