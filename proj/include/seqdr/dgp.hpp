#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "seqdr/dataset.hpp"

namespace seqdr {

// Which true mechanisms are non-logistic / non-linear, making the matching
// working model wrong. ps1/ps2 bend the treatment-assignment links; or2 adds
// a centered noise-quadratic to the time-2 outcome mean (so the time-1 mean
// stays linear); or1 bends the S2|S1 mean, which makes the nested time-1
// outcome mean non-linear while leaving the time-2 mean intact.
struct MisspecFlags {
  bool ps1 = false;
  bool ps2 = false;
  bool or2 = false;
  bool or1 = false;
};

// The four model-correctness patterns under which the estimator stays valid:
// at each time, at least one of the propensity / outcome models is correct.
enum class CanPattern { AllCorrect, OrBothCorrect, PsBothCorrect,
                        Or1Ps2Correct, Or2Ps1Correct };

MisspecFlags misspec_for(CanPattern pattern);

// Synthetic two-stage DGP with fully known ground truth.
//
//   S1 ~ N(0, I) with the constant column prepended;
//   A1 | S1 ~ Bernoulli(pi), pi = g(gamma0's1 [+ quad features]) truncated;
//   S2(a1) = m(S1) + tau a1 + xi, m linear in S1 via s2_cross
//            [+ quad features when or1 is bent], xi ~ N(0, s2_noise_sd^2 I);
//   A2 | Sbar2 ~ Bernoulli(rho), rho = g(delta0'sbar2 [+ quad]) truncated;
//   Y(a1,a2) = nu(S1, S2(a1)) - effect_a1 (1-a1) - effect_a2 (1-a2) + eps,
//            nu = alpha0'sbar2 [+ centered residual quadratic when or2 bent];
//   Y = Y(A1, A2).
//
// Potential outcomes are functions of (S1, xi, eps) only, so sequential
// ignorability holds by construction.
struct ScenarioSpec {
  int n = 2000;
  int d1 = 100;
  int d2 = 100;
  int s_gamma = 4, s_delta = 4, s_alpha = 4, s_beta = 4;  // active counts

  Eigen::VectorXd gamma0;  // d1
  Eigen::VectorXd delta0;  // d1+d2
  Eigen::VectorXd alpha0;  // d1+d2

  // Linear loadings of the S2 mean on S1 coordinates.
  struct Cross {
    int s2_index = 0;
    int s1_index = 0;
    double weight = 0.0;
  };
  std::vector<Cross> s2_cross;
  Eigen::VectorXd s2_shift;  // tau (d2), added to the S2 mean when a1 = 1

  double s2_noise_sd = 1.0;
  double noise_sd = 1.0;

  MisspecFlags misspec;
  double w_ps1 = 0.5, w_ps2 = 0.5, w_or2 = 1.0, w_or1 = 0.5;

  double c0 = 0.01;             // truncation floor for the true propensities
  bool allow_violation = false; // permit patterns breaking the validity rule
  std::uint64_t seed = 1;

  // Shifts defining the non-(1,1) potential outcomes.
  double effect_a1 = 1.0, effect_a2 = 0.5;

  void validate() const;
};

// Canonical desk-scale scenario: alternating-sign active coefficients, a few
// S2-on-S1 loadings, and tau on the leading S2 coordinates.
ScenarioSpec default_scenario(int n, int d1, int d2, int s_gamma, int s_delta,
                              int s_alpha, std::uint64_t seed);

struct EtaExactFlags {
  bool gamma = false, delta = false, alpha = false, beta = false;
};

struct GroundTruth {
  double theta_true = 0.0;  // E[Y(1,1)]
  double mc_se = 0.0;       // 0 when theta_true is analytic
  NuisanceParams oracle;    // true generating quadruple (beta derived)
  EtaExactFlags exact;      // which components equal the population targets
};

// Deterministic per seed; theta_true is analytic whenever the nested time-1
// mean is linear, otherwise a 10^6-draw Monte Carlo with recorded mc_se.
std::pair<Dataset, GroundTruth> generate(const ScenarioSpec& spec);

// The data half of generate() with an explicit seed override (replication
// engines derive per-replication seeds and reuse one cached GroundTruth).
Dataset generate_data(const ScenarioSpec& spec, std::uint64_t seed);

GroundTruth compute_ground_truth(const ScenarioSpec& spec);

// Population ("pseudo-true") nuisance quadruple: the four unpenalized losses
// solved sequentially on one n_pop-sized draw. Well defined under
// misspecification; equals the generating coefficients when the matching
// model is correct. Throws on solver non-convergence.
NuisanceParams oracle_eta(const ScenarioSpec& spec, long n_pop = 1000000);

}  // namespace seqdr
