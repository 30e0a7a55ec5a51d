#include "seqdr/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "seqdr/errors.hpp"

namespace seqdr {

namespace {

constexpr double kLinPredCap = 700.0;

// exp(-u) with the linear predictor capped at |u| <= 700; sets `hit` when the
// cap binds so callers can flag the evaluation as saturated.
inline double capped_exp_neg(double u, bool& hit) {
  if (u > kLinPredCap) {
    hit = true;
    u = kLinPredCap;
  } else if (u < -kLinPredCap) {
    hit = true;
    u = -kLinPredCap;
  }
  return std::exp(-u);
}

// log(1 + exp(u)) in the standard stable branches.
inline double log1pexp(double u) {
  if (u <= -37.0) return std::exp(u);
  if (u <= 18.0) return std::log1p(std::exp(u));
  if (u <= 33.3) return u + std::exp(-u);
  return u;
}

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

void require_rows(const Subsample& rows) {
  if (rows.rows() < 1)
    throw std::invalid_argument("loss evaluation on an empty subsample");
}

// 1/g(u) = 1 + exp(-u), capped.
inline double inv_g(double u, bool& hit) { return 1.0 + capped_exp_neg(u, hit); }

}  // namespace

int loss_dim(LossKind kind, int d1, int d) {
  switch (kind) {
    case LossKind::L1Ps1:
    case LossKind::L4Or1:
    case LossKind::BasePs1:
    case LossKind::BaseOr1:
      return d1;
    default:
      return d;
  }
}

Subsample gather(const Dataset& data, std::span<const int> indices) {
  const int m = static_cast<int>(indices.size());
  Subsample out;
  out.x1.resize(m, data.d1());
  out.xbar.resize(m, data.d());
  out.y.resize(m);
  out.a1.resize(m);
  out.a2.resize(m);
  for (int r = 0; r < m; ++r) {
    const int i = indices[r];
    out.x1.row(r) = data.s1.row(i);
    out.xbar.row(r).head(data.d1()) = data.s1.row(i);
    out.xbar.row(r).tail(data.d2()) = data.s2.row(i);
    out.y[r] = data.y[i];
    out.a1[r] = static_cast<double>(data.a1[i]);
    out.a2[r] = static_cast<double>(data.a2[i]);
  }
  return out;
}

Subsample gather_all(const Dataset& data) {
  std::vector<int> idx(data.n());
  for (int i = 0; i < data.n(); ++i) idx[i] = i;
  return gather(data, idx);
}

LossEval eval_l1(const Eigen::VectorXd& gamma, const Subsample& rows) {
  require_rows(rows);
  const int m = rows.rows();
  const Eigen::VectorXd u = rows.x1 * gamma;
  LossEval out;
  double value = 0.0;
  Eigen::ArrayXd c(m);
  for (int i = 0; i < m; ++i) {
    const double e = capped_exp_neg(u[i], out.saturated);
    value += (1.0 - rows.a1[i]) * u[i] + rows.a1[i] * e;
    c[i] = (1.0 - rows.a1[i]) - rows.a1[i] * e;
  }
  out.value = value / m;
  out.gradient = rows.x1.transpose() * c.matrix() / m;
  return out;
}

LossEval eval_l2(const Eigen::VectorXd& delta, const Eigen::VectorXd& gamma_hat,
                 const Subsample& rows) {
  require_rows(rows);
  const int m = rows.rows();
  const Eigen::VectorXd u1 = rows.x1 * gamma_hat;
  const Eigen::VectorXd ub = rows.xbar * delta;
  LossEval out;
  double value = 0.0;
  Eigen::ArrayXd c(m);
  for (int i = 0; i < m; ++i) {
    if (rows.a1[i] == 0.0) {
      c[i] = 0.0;
      continue;
    }
    const double w = inv_g(u1[i], out.saturated);
    const double e = capped_exp_neg(ub[i], out.saturated);
    value += w * ((1.0 - rows.a2[i]) * ub[i] + rows.a2[i] * e);
    c[i] = w * ((1.0 - rows.a2[i]) - rows.a2[i] * e);
  }
  out.value = value / m;
  out.gradient = rows.xbar.transpose() * c.matrix() / m;
  return out;
}

LossEval eval_l3(const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma_hat,
                 const Eigen::VectorXd& delta_hat, const Subsample& rows) {
  require_rows(rows);
  const int m = rows.rows();
  const Eigen::VectorXd u1 = rows.x1 * gamma_hat;
  const Eigen::VectorXd ub = rows.xbar * delta_hat;
  LossEval out;
  Eigen::ArrayXd w(m);
  for (int i = 0; i < m; ++i) {
    w[i] = (rows.a1[i] * rows.a2[i] == 0.0)
               ? 0.0
               : capped_exp_neg(ub[i], out.saturated) *
                     inv_g(u1[i], out.saturated);
  }
  const Eigen::ArrayXd r = (rows.y - rows.xbar * alpha).array();
  out.value = (w * r.square()).sum() / m;
  out.gradient = rows.xbar.transpose() * (-2.0 * w * r).matrix() / m;
  return out;
}

LossEval eval_l4(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma_hat,
                 const Eigen::VectorXd& delta_hat,
                 const Eigen::VectorXd& alpha_hat, const Subsample& rows) {
  require_rows(rows);
  const int m = rows.rows();
  const Eigen::VectorXd u1 = rows.x1 * gamma_hat;
  const Eigen::VectorXd ub = rows.xbar * delta_hat;
  const Eigen::VectorXd nu = rows.xbar * alpha_hat;
  LossEval out;
  Eigen::ArrayXd w(m);
  Eigen::ArrayXd t(m);
  for (int i = 0; i < m; ++i) {
    if (rows.a1[i] == 0.0) {
      w[i] = 0.0;
      t[i] = 0.0;
      continue;
    }
    w[i] = capped_exp_neg(u1[i], out.saturated);
    // Doubly robust pseudo-outcome sbar2'alpha + a2 (y - sbar2'alpha)/g.
    t[i] = nu[i] +
           rows.a2[i] * (rows.y[i] - nu[i]) * inv_g(ub[i], out.saturated);
  }
  const Eigen::ArrayXd r = t - (rows.x1 * beta).array();
  out.value = (w * r.square()).sum() / m;
  out.gradient = rows.x1.transpose() * (-2.0 * w * r).matrix() / m;
  return out;
}

LossEval eval_baseline(LossKind kind, const Eigen::VectorXd& coef,
                       const std::vector<Eigen::VectorXd>& frozen,
                       const Subsample& rows) {
  require_rows(rows);
  const int m = rows.rows();
  LossEval out;
  switch (kind) {
    case LossKind::BasePs1: {
      const Eigen::VectorXd u = rows.x1 * coef;
      double value = 0.0;
      Eigen::ArrayXd c(m);
      for (int i = 0; i < m; ++i) {
        value += -rows.a1[i] * u[i] + log1pexp(u[i]);
        c[i] = sigmoid(u[i]) - rows.a1[i];
      }
      out.value = value / m;
      out.gradient = rows.x1.transpose() * c.matrix() / m;
      return out;
    }
    case LossKind::BasePs2: {
      const Eigen::VectorXd u = rows.xbar * coef;
      double value = 0.0;
      Eigen::ArrayXd c(m);
      for (int i = 0; i < m; ++i) {
        if (rows.a1[i] == 0.0) {
          c[i] = 0.0;
          continue;
        }
        value += -rows.a2[i] * u[i] + log1pexp(u[i]);
        c[i] = sigmoid(u[i]) - rows.a2[i];
      }
      out.value = value / m;
      out.gradient = rows.xbar.transpose() * c.matrix() / m;
      return out;
    }
    case LossKind::BaseOr2: {
      const Eigen::ArrayXd w = rows.a1 * rows.a2;
      const Eigen::ArrayXd r = (rows.y - rows.xbar * coef).array();
      out.value = (w * r.square()).sum() / m;
      out.gradient = rows.xbar.transpose() * (-2.0 * w * r).matrix() / m;
      return out;
    }
    case LossKind::BaseOr1: {
      if (frozen.size() != 1)
        throw std::invalid_argument("BaseOr1 requires the fitted alpha1");
      const Eigen::ArrayXd t = (rows.xbar * frozen[0]).array();
      const Eigen::ArrayXd r = t - (rows.x1 * coef).array();
      out.value = (rows.a1 * r.square()).sum() / m;
      out.gradient = rows.x1.transpose() * (-2.0 * rows.a1 * r).matrix() / m;
      return out;
    }
    default:
      throw std::invalid_argument("eval_baseline: not a baseline loss kind");
  }
}

LossProblem::LossProblem(LossKind kind, Subsample rows,
                         std::vector<Eigen::VectorXd> frozen)
    : kind_(kind), data_(std::move(rows)), frozen_(std::move(frozen)) {
  require_rows(data_);
  const int d1 = static_cast<int>(data_.x1.cols());
  const int d = static_cast<int>(data_.xbar.cols());
  dim_ = loss_dim(kind_, d1, d);

  const std::size_t expected_frozen = [&]() -> std::size_t {
    switch (kind_) {
      case LossKind::L1Ps1:
      case LossKind::BasePs1:
      case LossKind::BasePs2:
      case LossKind::BaseOr2:
        return 0;
      case LossKind::L2Ps2:
      case LossKind::BaseOr1:
        return 1;
      case LossKind::L3Or2:
        return 2;
      case LossKind::L4Or1:
        return 3;
    }
    return 0;
  }();
  if (frozen_.size() != expected_frozen)
    throw std::invalid_argument("LossProblem: wrong number of frozen vectors");

  const int m = data_.rows();
  bool hit = false;
  switch (kind_) {
    case LossKind::L2Ps2: {
      weights_.resize(m);
      const Eigen::VectorXd u1 = data_.x1 * frozen_[0];
      for (int i = 0; i < m; ++i)
        weights_[i] = data_.a1[i] == 0.0 ? 0.0 : inv_g(u1[i], hit);
      break;
    }
    case LossKind::L3Or2: {
      weights_.resize(m);
      const Eigen::VectorXd u1 = data_.x1 * frozen_[0];
      const Eigen::VectorXd ub = data_.xbar * frozen_[1];
      for (int i = 0; i < m; ++i)
        weights_[i] = (data_.a1[i] * data_.a2[i] == 0.0)
                          ? 0.0
                          : capped_exp_neg(ub[i], hit) * inv_g(u1[i], hit);
      targets_ = data_.y;
      break;
    }
    case LossKind::L4Or1: {
      weights_.resize(m);
      targets_.resize(m);
      const Eigen::VectorXd u1 = data_.x1 * frozen_[0];
      const Eigen::VectorXd ub = data_.xbar * frozen_[1];
      const Eigen::VectorXd nu = data_.xbar * frozen_[2];
      for (int i = 0; i < m; ++i) {
        if (data_.a1[i] == 0.0) {
          weights_[i] = 0.0;
          targets_[i] = 0.0;
          continue;
        }
        weights_[i] = capped_exp_neg(u1[i], hit);
        targets_[i] =
            nu[i] + data_.a2[i] * (data_.y[i] - nu[i]) * inv_g(ub[i], hit);
      }
      break;
    }
    case LossKind::BaseOr2:
      weights_ = data_.a1 * data_.a2;
      targets_ = data_.y;
      break;
    case LossKind::BaseOr1:
      weights_ = data_.a1;
      targets_ = data_.xbar * frozen_[0];
      break;
    default:
      break;
  }
  saturated_ = hit;
}

double LossProblem::value(const Eigen::VectorXd& coef) const {
  switch (kind_) {
    case LossKind::L3Or2:
    case LossKind::L4Or1:
    case LossKind::BaseOr2:
    case LossKind::BaseOr1: {
      const auto& x =
          (kind_ == LossKind::L3Or2 || kind_ == LossKind::BaseOr2) ? data_.xbar
                                                                   : data_.x1;
      const Eigen::ArrayXd r = targets_.array() - (x * coef).array();
      return (weights_ * r.square()).sum() / data_.rows();
    }
    case LossKind::L2Ps2: {
      const Eigen::VectorXd ub = data_.xbar * coef;
      bool hit = false;
      double value = 0.0;
      for (int i = 0; i < data_.rows(); ++i) {
        if (weights_[i] == 0.0) continue;
        value += weights_[i] * ((1.0 - data_.a2[i]) * ub[i] +
                                data_.a2[i] * capped_exp_neg(ub[i], hit));
      }
      if (hit) saturated_ = true;
      return value / data_.rows();
    }
    default:
      return value_and_gradient(coef).value;
  }
}

LossEval LossProblem::value_and_gradient(const Eigen::VectorXd& coef) const {
  if (coef.size() != dim_)
    throw std::invalid_argument("LossProblem: coefficient dimension mismatch");
  LossEval out;
  switch (kind_) {
    case LossKind::L1Ps1:
      out = eval_l1(coef, data_);
      break;
    case LossKind::L2Ps2: {
      // Same formula as eval_l2, reusing the precomputed a1/g weights.
      const int m = data_.rows();
      const Eigen::VectorXd ub = data_.xbar * coef;
      double value = 0.0;
      Eigen::ArrayXd c(m);
      for (int i = 0; i < m; ++i) {
        if (weights_[i] == 0.0) {
          c[i] = 0.0;
          continue;
        }
        const double e = capped_exp_neg(ub[i], out.saturated);
        value += weights_[i] * ((1.0 - data_.a2[i]) * ub[i] + data_.a2[i] * e);
        c[i] = weights_[i] * ((1.0 - data_.a2[i]) - data_.a2[i] * e);
      }
      out.value = value / m;
      out.gradient = data_.xbar.transpose() * c.matrix() / m;
      break;
    }
    case LossKind::L3Or2:
    case LossKind::BaseOr2: {
      const Eigen::ArrayXd r = targets_.array() - (data_.xbar * coef).array();
      out.value = (weights_ * r.square()).sum() / data_.rows();
      out.gradient =
          data_.xbar.transpose() * (-2.0 * weights_ * r).matrix() / data_.rows();
      break;
    }
    case LossKind::L4Or1:
    case LossKind::BaseOr1: {
      const Eigen::ArrayXd r = targets_.array() - (data_.x1 * coef).array();
      out.value = (weights_ * r.square()).sum() / data_.rows();
      out.gradient =
          data_.x1.transpose() * (-2.0 * weights_ * r).matrix() / data_.rows();
      break;
    }
    case LossKind::BasePs1:
    case LossKind::BasePs2:
      out = eval_baseline(kind_, coef, frozen_, data_);
      break;
  }
  if (out.saturated) saturated_ = true;
  return out;
}

}  // namespace seqdr
