#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "seqdr/dataset.hpp"

namespace seqdr {

// The four moment-targeted losses and their plain-regression counterparts.
enum class LossKind {
  L1Ps1,    // (1-A1) s1'g + A1 exp(-s1'g)
  L2Ps2,    // A1/g(s1'gamma) {(1-A2) sbar2'd + A2 exp(-sbar2'd)}
  L3Or2,    // A1 A2 exp(-sbar2'delta)/g(s1'gamma) (Y - sbar2'a)^2
  L4Or1,    // A1 exp(-s1'gamma) {sbar2'alpha + A2(Y-sbar2'alpha)/g(sbar2'delta) - s1'b}^2
  BasePs1,  // logistic log-likelihood for A1 | S1
  BasePs2,  // logistic log-likelihood for A2 | Sbar2 on A1=1 rows
  BaseOr2,  // square loss for Y | Sbar2 on A1=A2=1 rows
  BaseOr1,  // square loss for sbar2'alpha1 | S1 on A1=1 rows
};

// Coefficient dimension of a loss kind: d1 for the time-1 models, d for the
// time-2 models.
int loss_dim(LossKind kind, int d1, int d);

// Rows of a Dataset materialized for loss evaluation. x1 is the time-1 block,
// xbar the concatenated (s1, s2) block.
struct Subsample {
  Eigen::MatrixXd x1;
  Eigen::MatrixXd xbar;
  Eigen::VectorXd y;
  Eigen::ArrayXd a1;
  Eigen::ArrayXd a2;

  int rows() const { return static_cast<int>(y.size()); }
};

Subsample gather(const Dataset& data, std::span<const int> indices);
Subsample gather_all(const Dataset& data);

struct LossEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  bool saturated = false;  // a linear predictor hit the +-700 cap
};

// Subsample-mean losses with analytic gradients. The frozen coefficients of
// the later stages are passed explicitly and treated as data.
LossEval eval_l1(const Eigen::VectorXd& gamma, const Subsample& rows);
LossEval eval_l2(const Eigen::VectorXd& delta, const Eigen::VectorXd& gamma_hat,
                 const Subsample& rows);
LossEval eval_l3(const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma_hat,
                 const Eigen::VectorXd& delta_hat, const Subsample& rows);
LossEval eval_l4(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma_hat,
                 const Eigen::VectorXd& delta_hat,
                 const Eigen::VectorXd& alpha_hat, const Subsample& rows);

// Baseline (plain-regression) losses. `frozen` is empty except for BaseOr1,
// which needs the previously fitted alpha1.
LossEval eval_baseline(LossKind kind, const Eigen::VectorXd& coef,
                       const std::vector<Eigen::VectorXd>& frozen,
                       const Subsample& rows);

// A loss bound to its subsample and frozen coefficients, with the fixed
// per-row weights and pseudo-outcomes precomputed. This is what the solver
// minimizes.
class LossProblem {
 public:
  LossProblem(LossKind kind, Subsample rows,
              std::vector<Eigen::VectorXd> frozen);

  LossKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int rows() const { return data_.rows(); }
  const Subsample& subsample() const { return data_; }

  double value(const Eigen::VectorXd& coef) const;
  LossEval value_and_gradient(const Eigen::VectorXd& coef) const;

  // True if any evaluation since construction hit the linear-predictor cap.
  bool saturated() const { return saturated_; }

 private:
  LossKind kind_;
  Subsample data_;
  std::vector<Eigen::VectorXd> frozen_;
  int dim_;
  // Precomputed per-row constants for the quadratic kinds: weights w and
  // regression targets t, so that loss = mean w (t - X c)^2.
  Eigen::ArrayXd weights_;
  Eigen::VectorXd targets_;
  mutable bool saturated_ = false;
};

}  // namespace seqdr
