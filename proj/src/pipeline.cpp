#include "seqdr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "seqdr/errors.hpp"
#include "seqdr/losses.hpp"
#include "seqdr/score.hpp"
#include "seqdr/stats.hpp"

namespace seqdr {

void EstimatorChoice::validate() const {
  for (double s : lambda_scales)
    if (!(s > 0.0)) throw DataError("lambda scales must be positive");
  for (double c : lambda_grid)
    if (!(c > 0.0)) throw DataError("lambda grid entries must be positive");
  overlap.validate();
  solver.validate();
}

CrossFitPlan make_plan(int n, int k_folds, std::uint64_t seed) {
  if (k_folds < 2) throw DataError("make_plan: need at least 2 folds");
  if (n < 8 * k_folds)
    throw DataError("make_plan: need at least " + std::to_string(8 * k_folds) +
                    " rows for " + std::to_string(k_folds) + " folds, got " +
                    std::to_string(n));

  CrossFitPlan plan;
  plan.n = n;
  plan.k_folds = k_folds;
  plan.seed = seed;
  plan.fold_of.resize(n);
  plan.folds.assign(k_folds, {});
  plan.groups.assign(k_folds, {});

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }

  for (int pos = 0; pos < n; ++pos) {
    const int k = pos % k_folds;
    plan.fold_of[perm[pos]] = k;
    plan.folds[k].push_back(perm[pos]);
  }

  for (int k = 0; k < k_folds; ++k) {
    int slot = 0;  // round-robin over the shuffled complement
    for (int pos = 0; pos < n; ++pos) {
      if (pos % k_folds == k) continue;
      plan.groups[k][slot % 4].push_back(perm[pos]);
      ++slot;
    }
    for (auto& g : plan.groups[k]) std::sort(g.begin(), g.end());
    std::sort(plan.folds[k].begin(), plan.folds[k].end());
  }
  return plan;
}

namespace {

struct StageSetup {
  LossKind kind;
  const char* name;
  int dim;
  int required_a1;    // minimum rows with a1 == 1
  int required_a1a2;  // minimum rows with a1 == a2 == 1
};

std::array<StageSetup, 4> stage_setups(NuisanceFamily family, int d1, int d) {
  if (family == NuisanceFamily::MomentTargeted)
    return {{{LossKind::L1Ps1, "gamma", d1, 1, 0},
             {LossKind::L2Ps2, "delta", d, 1, 1},
             {LossKind::L3Or2, "alpha", d, 1, 1},
             {LossKind::L4Or1, "beta", d1, 1, 0}}};
  return {{{LossKind::BasePs1, "gamma", d1, 1, 0},
           {LossKind::BasePs2, "delta", d, 1, 1},
           {LossKind::BaseOr2, "alpha", d, 1, 1},
           {LossKind::BaseOr1, "beta", d1, 1, 0}}};
}

void check_degeneracy(const Subsample& sub, const StageSetup& st, int fold_k) {
  const int n_a1 = static_cast<int>((sub.a1 == 1.0).count());
  const int n_a1a2 = static_cast<int>(((sub.a1 * sub.a2) == 1.0).count());
  if (n_a1 < st.required_a1 || n_a1a2 < st.required_a1a2)
    throw DegenerateSubsampleError(
        "degenerate subsample in fold " + std::to_string(fold_k) + ", stage " +
        st.name + ": " + std::to_string(sub.rows()) + " rows, " +
        std::to_string(n_a1) + " with a1=1, " + std::to_string(n_a1a2) +
        " with a1=a2=1");
}

// Frozen coefficients feeding a stage, in the fit order of its loss.
std::vector<Eigen::VectorXd> frozen_for(NuisanceFamily family, int stage,
                                        const NuisanceParams& eta) {
  if (family == NuisanceFamily::MomentTargeted) {
    switch (stage) {
      case 1: return {eta.gamma};
      case 2: return {eta.gamma, eta.delta};
      case 3: return {eta.gamma, eta.delta, eta.alpha};
      default: return {};
    }
  }
  if (stage == 3) return {eta.alpha};  // baseline beta regresses on alpha1
  return {};
}

// Holdout selection of the penalty scale on one stage's subsample.
double select_scale(LossKind kind, const Dataset& data,
                    const std::vector<int>& idx,
                    const std::vector<Eigen::VectorXd>& frozen, int dim,
                    const EstimatorChoice& choice, double fallback) {
  const int m = static_cast<int>(idx.size());
  const int hold = std::max(1, m / 5);
  if (m - hold < 2) return fallback;
  const std::vector<int> train_idx(idx.begin(), idx.end() - hold);
  const std::vector<int> hold_idx(idx.end() - hold, idx.end());
  LossProblem train(kind, gather(data, train_idx), frozen);
  const Subsample hold_sub = gather(data, hold_idx);

  double best_scale = fallback;
  double best_loss = std::numeric_limits<double>::infinity();
  for (double c : choice.lambda_grid) {
    SolverConfig cfg = choice.solver;
    cfg.lambda = lambda_from_theory(m - hold, dim, c);
    const SolveResult r = solve(train, cfg);
    double loss;
    switch (kind) {
      case LossKind::L1Ps1: loss = eval_l1(r.coef, hold_sub).value; break;
      case LossKind::L2Ps2: loss = eval_l2(r.coef, frozen[0], hold_sub).value; break;
      case LossKind::L3Or2:
        loss = eval_l3(r.coef, frozen[0], frozen[1], hold_sub).value;
        break;
      case LossKind::L4Or1:
        loss = eval_l4(r.coef, frozen[0], frozen[1], frozen[2], hold_sub).value;
        break;
      default:
        loss = eval_baseline(kind, r.coef, frozen, hold_sub).value;
        break;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_scale = c;
    }
  }
  return best_scale;
}

}  // namespace

FittedNuisance fit_nuisances(const Dataset& data, const CrossFitPlan& plan,
                             int fold_k, const EstimatorChoice& choice) {
  choice.validate();
  if (fold_k < 0 || fold_k >= plan.k_folds)
    throw std::invalid_argument("fit_nuisances: fold index out of range");
  if (plan.n != data.n())
    throw DataError("fit_nuisances: plan was built for a different sample size");

  const auto setups = stage_setups(choice.family, data.d1(), data.d());
  FittedNuisance fit;
  Eigen::VectorXd* slots[4] = {&fit.eta.gamma, &fit.eta.delta, &fit.eta.alpha,
                               &fit.eta.beta};

  for (int stage = 0; stage < 4; ++stage) {
    const auto& st = setups[stage];
    const std::vector<int>& idx = plan.groups[fold_k][stage];
    Subsample sub = gather(data, idx);
    check_degeneracy(sub, st, fold_k);

    const auto frozen = frozen_for(choice.family, stage, fit.eta);
    double scale = choice.lambda_scales[stage];
    if (!choice.lambda_grid.empty())
      scale = select_scale(st.kind, data, idx, frozen, st.dim, choice, scale);

    LossProblem problem(st.kind, std::move(sub), frozen);
    SolverConfig cfg = choice.solver;
    cfg.lambda =
        lambda_from_theory(static_cast<int>(idx.size()), st.dim, scale);
    const SolveResult r = solve(problem, cfg);

    if (!r.converged && choice.strict)
      throw std::runtime_error("fit_nuisances: stage " + std::string(st.name) +
                               " in fold " + std::to_string(fold_k) +
                               " did not converge (kkt " +
                               std::to_string(r.kkt_violation) + ")");

    *slots[stage] = r.coef;
    fit.stages[stage] = {cfg.lambda, r.iterations, r.kkt_violation,
                         r.converged, r.saturated};
  }
  return fit;
}

EstimateReport estimate(const Dataset& data, const TreatmentPath& path,
                        const EstimatorChoice& choice, const CrossFitPlan& plan,
                        double level) {
  data.validate();
  choice.validate();
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must be in (0,1)");
  if (plan.n != data.n())
    throw DataError("estimate: plan was built for a different sample size");

  const Dataset relabeled = relabel_for_path(data, path);
  const int n = data.n();

  EstimateReport rep;
  rep.level = level;
  rep.n = n;
  rep.k_folds = plan.k_folds;
  rep.seed = plan.seed;
  rep.path = path;
  rep.family = choice.family;
  rep.score_values.resize(n);

  const TreatmentPath unit_path{1, 1};
  for (int k = 0; k < plan.k_folds; ++k) {
    FittedNuisance fit = fit_nuisances(relabeled, plan, k, choice);
    for (const auto& st : fit.stages) {
      if (!st.converged) ++rep.diagnostics.nonconverged_stages;
      if (st.saturated) ++rep.diagnostics.saturated_evals;
    }
    for (int i : plan.folds[k]) {
      // Clip accounting goes through score_dataset's logic; do the same
      // arithmetic row-wise here to keep per-row indices for error messages.
      rep.score_values[i] =
          score(relabeled.y[i], relabeled.a1[i], relabeled.a2[i],
                relabeled.s1.row(i), relabeled.s2.row(i), fit.eta, unit_path,
                choice.overlap, i);
    }
    // Count clips separately (score() itself does not expose the counter).
    if (choice.overlap.clip_propensities) {
      const Eigen::VectorXd u1 = relabeled.s1 * fit.eta.gamma;
      const Eigen::VectorXd ub =
          relabeled.s1 * fit.eta.delta.head(data.d1()) +
          relabeled.s2 * fit.eta.delta.tail(data.d2());
      for (int i : plan.folds[k]) {
        const int a1r = relabeled.a1[i];
        if (a1r != 1) continue;
        const double g1 = logistic(u1[i]);
        if (g1 < choice.overlap.c0 || g1 > 1.0 - choice.overlap.c0)
          ++rep.diagnostics.clipped;
        if (relabeled.a2[i] == 1) {
          const double g2 = logistic(ub[i]);
          if (g2 < choice.overlap.c0 || g2 > 1.0 - choice.overlap.c0)
            ++rep.diagnostics.clipped;
        }
      }
    }
    rep.per_fold.push_back(std::move(fit));
  }

  rep.theta_hat = rep.score_values.sum() / n;
  const double var =
      (rep.score_values.array() - rep.theta_hat).square().sum() / n;
  rep.sigma_hat = std::sqrt(var);
  if (rep.sigma_hat == 0.0) rep.diagnostics.sigma_degenerate = true;

  const double half =
      normal_critical(level) * rep.sigma_hat / std::sqrt(static_cast<double>(n));
  rep.ci_low = rep.theta_hat - half;
  rep.ci_high = rep.theta_hat + half;
  return rep;
}

EstimateReport estimate_dte(const Dataset& data, const TreatmentPath& treat,
                            const TreatmentPath& control,
                            const EstimatorChoice& choice,
                            const CrossFitPlan& plan, double level) {
  if (treat == control)
    throw std::invalid_argument("estimate_dte: paths must differ");
  EstimateReport rt = estimate(data, treat, choice, plan, level);
  EstimateReport rc = estimate(data, control, choice, plan, level);

  EstimateReport rep;
  rep.level = level;
  rep.n = rt.n;
  rep.k_folds = plan.k_folds;
  rep.seed = plan.seed;
  rep.path = treat;
  rep.control_path = control;
  rep.family = choice.family;
  rep.per_fold = std::move(rt.per_fold);
  rep.score_values = rt.score_values - rc.score_values;
  rep.diagnostics.clipped = rt.diagnostics.clipped + rc.diagnostics.clipped;
  rep.diagnostics.nonconverged_stages =
      rt.diagnostics.nonconverged_stages + rc.diagnostics.nonconverged_stages;
  rep.diagnostics.saturated_evals =
      rt.diagnostics.saturated_evals + rc.diagnostics.saturated_evals;

  rep.theta_hat = rt.theta_hat - rc.theta_hat;
  const double var =
      (rep.score_values.array() - rep.theta_hat).square().sum() / rep.n;
  rep.sigma_hat = std::sqrt(var);
  if (rep.sigma_hat == 0.0) rep.diagnostics.sigma_degenerate = true;
  const double half = normal_critical(level) * rep.sigma_hat /
                      std::sqrt(static_cast<double>(rep.n));
  rep.ci_low = rep.theta_hat - half;
  rep.ci_high = rep.theta_hat + half;
  return rep;
}

}  // namespace seqdr
