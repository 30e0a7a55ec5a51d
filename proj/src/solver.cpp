#include "seqdr/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace seqdr {

void SolverConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(backtrack_shrink > 0.0 && backtrack_shrink < 1.0))
    throw std::invalid_argument("backtrack_shrink must be in (0,1)");
  if (!(init_step > 0.0)) throw std::invalid_argument("init_step must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

namespace {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double kkt_from_gradient(const Eigen::VectorXd& grad,
                         const Eigen::VectorXd& coef, double lambda,
                         bool penalize_intercept) {
  double worst = 0.0;
  for (int j = 0; j < coef.size(); ++j) {
    const double lam = (j == 0 && !penalize_intercept) ? 0.0 : lambda;
    double breach;
    if (coef[j] == 0.0) {
      breach = std::max(std::fabs(grad[j]) - lam, 0.0);
    } else {
      breach = std::fabs(grad[j] + lam * (coef[j] > 0.0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, breach);
  }
  return worst;
}

double penalty(const Eigen::VectorXd& coef, double lambda,
               bool penalize_intercept) {
  double p = lambda * coef.lpNorm<1>();
  if (!penalize_intercept) p -= lambda * std::fabs(coef[0]);
  return p;
}

}  // namespace

double kkt_check(const LossProblem& problem, const Eigen::VectorXd& coef,
                 double lambda, bool penalize_intercept) {
  const LossEval ev = problem.value_and_gradient(coef);
  return kkt_from_gradient(ev.gradient, coef, lambda, penalize_intercept);
}

double lambda_from_theory(int n_subsample, int dim, double scale_c) {
  if (n_subsample < 2 || dim < 2)
    throw std::invalid_argument("lambda_from_theory requires n >= 2 and dim >= 2");
  return scale_c * std::sqrt(std::log(static_cast<double>(dim)) /
                             static_cast<double>(n_subsample));
}

SolveResult solve(const LossProblem& problem, const SolverConfig& config) {
  config.validate();
  const int dim = problem.dim();
  const double lambda = config.lambda;
  const bool pen0 = config.penalize_intercept;

  Eigen::VectorXd x = config.warm_start.value_or(Eigen::VectorXd::Zero(dim));
  if (x.size() != dim)
    throw std::invalid_argument("warm_start dimension mismatch");

  SolveResult res;
  double fx = problem.value(x);
  if (!std::isfinite(fx))
    throw std::invalid_argument("loss is non-finite at the start point");
  double objx = fx + penalty(x, lambda, pen0);

  Eigen::VectorXd yv = x;
  double t_momentum = 1.0;
  double step = config.init_step;

  auto prox = [&](const Eigen::VectorXd& v, double s) {
    Eigen::VectorXd z(dim);
    for (int j = 0; j < dim; ++j) {
      const double lam = (j == 0 && !pen0) ? 0.0 : lambda;
      z[j] = soft_threshold(v[j], s * lam);
    }
    return z;
  };

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    // Certify the current iterate before taking another step.
    const LossEval at_x = problem.value_and_gradient(x);
    res.kkt_violation = kkt_from_gradient(at_x.gradient, x, lambda, pen0);
    if (res.kkt_violation <= config.tol) {
      res.converged = true;
      res.iterations = iter - 1;
      break;
    }

    const LossEval at_y = problem.value_and_gradient(yv);
    // Gentle step recovery so one conservative backtrack does not pin the
    // step size for the rest of the run.
    step = std::min(config.init_step, step / config.backtrack_shrink);
    Eigen::VectorXd z;
    double fz = 0.0;
    while (true) {
      z = prox(yv - step * at_y.gradient, step);
      fz = problem.value(z);
      const Eigen::VectorXd dz = z - yv;
      const double quad =
          at_y.value + at_y.gradient.dot(dz) + dz.squaredNorm() / (2.0 * step);
      if (fz <= quad + 1e-12 * std::max(1.0, std::fabs(quad))) break;
      step *= config.backtrack_shrink;
      if (step < 1e-18)
        throw std::runtime_error("solver backtracking underflow");
    }

    const double objz = fz + penalty(z, lambda, pen0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    // Monotone FISTA: keep the incumbent when the accelerated step overshoots,
    // but let the momentum sequence still look at z.
    Eigen::VectorXd x_new;
    if (objz <= objx) {
      x_new = z;
      objx = objz;
    } else {
      x_new = x;
    }
    yv = x_new + (t_momentum / t_next) * (z - x_new) +
         ((t_momentum - 1.0) / t_next) * (x_new - x);
    x = x_new;
    t_momentum = t_next;
    res.iterations = iter;
  }

  res.coef = x;
  res.saturated = problem.saturated();
  if (!res.converged)
    res.kkt_violation = kkt_check(problem, x, lambda, pen0);
  return res;
}

}  // namespace seqdr
