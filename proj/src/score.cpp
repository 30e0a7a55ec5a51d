#include "seqdr/score.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "seqdr/errors.hpp"
#include "seqdr/stats.hpp"

namespace seqdr {

double logistic(double u) {
  if (!std::isfinite(u))
    throw std::invalid_argument("logistic: non-finite input");
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

namespace {

inline double clip_or_check(double g, const OverlapConfig& overlap,
                            int row_index) {
  if (overlap.clip_propensities) {
    const double lo = overlap.c0, hi = 1.0 - overlap.c0;
    return g < lo ? lo : (g > hi ? hi : g);
  }
  if (g == 0.0)
    throw NumericalDegeneracyError(
        "propensity is exactly 0 with clipping disabled at observation " +
        std::to_string(row_index));
  return g;
}

inline bool would_clip(double g, double c0) {
  return g < c0 || g > 1.0 - c0;
}

}  // namespace

double score(double y, int a1, int a2, const Eigen::RowVectorXd& s1_row,
             const Eigen::RowVectorXd& s2_row, const NuisanceParams& eta,
             const TreatmentPath& path, const OverlapConfig& overlap,
             int row_index) {
  overlap.validate();
  const int a1r = (a1 == path.a1) ? 1 : 0;
  const int a2r = (a2 == path.a2) ? 1 : 0;

  const double mu_hat = s1_row.dot(eta.beta);
  if (a1r == 0) return mu_hat;

  const double u1 = s1_row.dot(eta.gamma);
  const double ubar = s1_row.dot(eta.delta.head(s1_row.size())) +
                      s2_row.dot(eta.delta.tail(s2_row.size()));
  const double nu_hat = s1_row.dot(eta.alpha.head(s1_row.size())) +
                        s2_row.dot(eta.alpha.tail(s2_row.size()));
  const double g1 = clip_or_check(logistic(u1), overlap, row_index);
  double psi = mu_hat + (nu_hat - mu_hat) / g1;
  if (a2r == 1) {
    const double g2 = clip_or_check(logistic(ubar), overlap, row_index);
    psi += (y - nu_hat) / (g1 * g2);
  }
  return psi;
}

ScoredDataset score_dataset(const Dataset& data, const NuisanceParams& eta,
                            const TreatmentPath& path,
                            const OverlapConfig& overlap) {
  overlap.validate();
  eta.validate(data.d1(), data.d());
  const int n = data.n();

  ScoredDataset out;
  out.values.resize(n);

  const Eigen::VectorXd mu_hat = data.s1 * eta.beta;
  const Eigen::VectorXd u1 = data.s1 * eta.gamma;
  const Eigen::VectorXd ubar = data.s1 * eta.delta.head(data.d1()) +
                               data.s2 * eta.delta.tail(data.d2());
  const Eigen::VectorXd nu_hat = data.s1 * eta.alpha.head(data.d1()) +
                                 data.s2 * eta.alpha.tail(data.d2());

  for (int i = 0; i < n; ++i) {
    const int a1r = (data.a1[i] == path.a1) ? 1 : 0;
    const int a2r = (data.a2[i] == path.a2) ? 1 : 0;
    if (a1r == 0) {
      out.values[i] = mu_hat[i];
      continue;
    }
    double g1 = logistic(u1[i]);
    if (overlap.clip_propensities && would_clip(g1, overlap.c0)) ++out.clipped;
    g1 = clip_or_check(g1, overlap, i);
    double psi = mu_hat[i] + (nu_hat[i] - mu_hat[i]) / g1;
    if (a2r == 1) {
      double g2 = logistic(ubar[i]);
      if (overlap.clip_propensities && would_clip(g2, overlap.c0)) ++out.clipped;
      g2 = clip_or_check(g2, overlap, i);
      psi += (data.y[i] - nu_hat[i]) / (g1 * g2);
    }
    out.values[i] = psi;
  }
  return out;
}

DrCheckResult dr_representation_check(const DrTruth& truth,
                                      const DrWorking& working, long n_mc,
                                      std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  Eigen::VectorXd s1(truth.d1), s2(truth.d2);
  for (long it = 0; it < n_mc; ++it) {
    s1[0] = 1.0;
    for (int j = 1; j < truth.d1; ++j) s1[j] = rng.normal();
    const Eigen::VectorXd m = truth.s2_mean(s1);
    for (int j = 0; j < truth.d2; ++j) s2[j] = m[j] + truth.s2_sd * rng.normal();
    const double y11 = truth.nu(s1, s2) + truth.noise_sd * rng.normal();
    const int a1 = rng.bernoulli(truth.pi(s1)) ? 1 : 0;
    const int a2 = rng.bernoulli(truth.rho(s1, s2)) ? 1 : 0;

    // Functional score under the (1,1) path; S2 here is the a1=1 potential
    // draw, which equals the observed S2 on every row the score touches.
    double psi = working.mu(s1);
    if (a1 == 1) {
      psi += (working.nu(s1, s2) - working.mu(s1)) / working.pi(s1);
      if (a2 == 1)
        psi += (y11 - working.nu(s1, s2)) /
               (working.pi(s1) * working.rho(s1, s2));
    }
    const double diff = psi - y11;
    sum += diff;
    sumsq += diff * diff;
  }
  const double mean = sum / static_cast<double>(n_mc);
  const double var =
      sumsq / static_cast<double>(n_mc) - mean * mean;
  DrCheckResult res;
  res.estimate = mean;
  res.mc_se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_mc));
  return res;
}

}  // namespace seqdr
