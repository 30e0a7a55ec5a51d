#pragma once

#include <Eigen/Core>
#include <optional>

#include "seqdr/losses.hpp"

namespace seqdr {

struct SolverConfig {
  double lambda = 0.0;            // L1 weight
  int max_iter = 5000;
  double tol = 1e-8;              // KKT tolerance certifying optimality
  double backtrack_shrink = 0.5;  // step shrink factor, in (0,1)
  double init_step = 1.0;
  bool penalize_intercept = true; // false exempts coordinate 0 from the penalty
  std::optional<Eigen::VectorXd> warm_start;

  void validate() const;
};

struct SolveResult {
  Eigen::VectorXd coef;
  int iterations = 0;
  double kkt_violation = 0.0;
  bool converged = false;
  bool saturated = false;
};

// Max coordinatewise breach of the first-order conditions of
// min loss(coef) + lambda ||coef||_1: for coef_j = 0 the breach is
// max(|grad_j| - lambda_j, 0), otherwise |grad_j + lambda_j sign(coef_j)|,
// with lambda_0 = 0 when the intercept is unpenalized.
double kkt_check(const LossProblem& problem, const Eigen::VectorXd& coef,
                 double lambda, bool penalize_intercept = true);

// Accelerated proximal gradient (monotone FISTA) with backtracking.
// Deterministic given inputs. Throws std::invalid_argument when the loss is
// non-finite at the start point; hitting max_iter reports converged = false.
SolveResult solve(const LossProblem& problem, const SolverConfig& config);

// Theory-scaled penalty level c * sqrt(log(dim) / n_subsample).
double lambda_from_theory(int n_subsample, int dim, double scale_c);

}  // namespace seqdr
