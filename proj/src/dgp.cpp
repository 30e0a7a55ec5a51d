#include "seqdr/dgp.hpp"

#include <cmath>
#include <string>

#include "seqdr/errors.hpp"
#include "seqdr/losses.hpp"
#include "seqdr/score.hpp"
#include "seqdr/solver.hpp"
#include "seqdr/stats.hpp"

namespace seqdr {

MisspecFlags misspec_for(CanPattern pattern) {
  MisspecFlags f;
  switch (pattern) {
    case CanPattern::AllCorrect:
      break;
    case CanPattern::OrBothCorrect:  // both propensity models wrong
      f.ps1 = f.ps2 = true;
      break;
    case CanPattern::PsBothCorrect:  // both outcome models wrong
      f.or2 = f.or1 = true;
      break;
    case CanPattern::Or1Ps2Correct:  // time-1 PS and time-2 OR wrong
      f.ps1 = f.or2 = true;
      break;
    case CanPattern::Or2Ps1Correct:  // time-2 PS and time-1 OR wrong
      f.ps2 = f.or1 = true;
      break;
  }
  return f;
}

void ScenarioSpec::validate() const {
  if (n < 1) throw DataError("scenario: n must be >= 1");
  if (d1 < 1 || d2 < 1) throw DataError("scenario: dimensions must be >= 1");
  if (gamma0.size() != d1) throw DataError("scenario: gamma0 must have length d1");
  if (delta0.size() != d1 + d2)
    throw DataError("scenario: delta0 must have length d1+d2");
  if (alpha0.size() != d1 + d2)
    throw DataError("scenario: alpha0 must have length d1+d2");
  if (s2_shift.size() != d2)
    throw DataError("scenario: s2_shift must have length d2");
  if (s_gamma > d1 - 1 || s_delta > d1 + d2 - 1 || s_alpha > d1 + d2 - 1 ||
      s_beta > d1 - 1)
    throw DataError("scenario: sparsity counts exceed dimensions");
  if (!(c0 > 0.0 && c0 < 0.5)) throw DataError("scenario: c0 must be in (0,0.5)");
  if (!(noise_sd > 0.0) || !(s2_noise_sd > 0.0))
    throw DataError("scenario: noise scales must be positive");
  for (const auto& c : s2_cross)
    if (c.s2_index < 0 || c.s2_index >= d2 || c.s1_index < 0 || c.s1_index >= d1)
      throw DataError("scenario: s2_cross index out of range");
  if ((misspec.ps1 || misspec.ps2 || misspec.or1) && d1 < 3)
    throw DataError("scenario: quadratic misspecification features need d1 >= 3");
  if (!allow_violation) {
    if (misspec.ps1 && misspec.or1)
      throw DataError(
          "invalid scenario: both time-1 models misspecified (set the "
          "violation override to force this)");
    if (misspec.ps2 && misspec.or2)
      throw DataError(
          "invalid scenario: both time-2 models misspecified (set the "
          "violation override to force this)");
  }
}

ScenarioSpec default_scenario(int n, int d1, int d2, int s_gamma, int s_delta,
                              int s_alpha, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n = n;
  spec.d1 = d1;
  spec.d2 = d2;
  spec.s_gamma = s_gamma;
  spec.s_delta = s_delta;
  spec.s_alpha = s_alpha;
  spec.s_beta = s_alpha;  // beta inherits alpha's footprint through the chain
  spec.seed = seed;

  const int d = d1 + d2;
  spec.gamma0 = Eigen::VectorXd::Zero(d1);
  for (int i = 0; i < s_gamma; ++i)
    spec.gamma0[1 + i] = (i % 2 == 0) ? 0.5 : -0.5;

  spec.delta0 = Eigen::VectorXd::Zero(d);
  const int h_delta = (s_delta + 1) / 2;
  for (int i = 0; i < s_delta; ++i) {
    const int j = (i < h_delta) ? 1 + i : d1 + (i - h_delta);
    spec.delta0[j] = (i % 2 == 0) ? 0.5 : -0.5;
  }

  spec.alpha0 = Eigen::VectorXd::Zero(d);
  spec.alpha0[0] = 1.0;
  const int h_alpha = (s_alpha + 1) / 2;
  for (int i = 0; i < s_alpha; ++i) {
    const int j = (i < h_alpha) ? 1 + i : d1 + (i - h_alpha);
    spec.alpha0[j] = (i % 2 == 0) ? 0.6 : -0.6;
  }

  for (int j = 0; j < std::min(4, d2); ++j)
    spec.s2_cross.push_back({j, 1 + (j % std::max(1, d1 - 1)), 0.35});

  spec.s2_shift = Eigen::VectorXd::Zero(d2);
  for (int j = 0; j < std::min(4, d2); ++j) spec.s2_shift[j] = 0.25;

  spec.validate();
  return spec;
}

namespace {

inline double clamp_prob(double p, double c0) {
  return p < c0 ? c0 : (p > 1.0 - c0 ? 1.0 - c0 : p);
}

// Quadratic features bending the time-1 propensity link.
inline double ps1_feature(const Eigen::VectorXd& s1) {
  return (s1[1] * s1[1] - 1.0) + s1[1] * s1[2];
}

// Quadratic features bending the time-2 propensity link.
inline double ps2_feature(const Eigen::VectorXd& s1, const Eigen::VectorXd& s2) {
  return (s1[2] * s1[2] - 1.0) + s1[1] * s2[0];
}

// S2|S1 mean, including the or1 bend when requested.
Eigen::VectorXd s2_mean(const ScenarioSpec& spec, const Eigen::VectorXd& s1) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(spec.d2);
  for (const auto& c : spec.s2_cross) m[c.s2_index] += c.weight * s1[c.s1_index];
  if (spec.misspec.or1) {
    m[0] += spec.w_or1 * (s1[1] * s1[1] - 1.0);
    if (spec.d2 > 1) m[1] += spec.w_or1 * (s1[1] * s1[2]);
  }
  return m;
}

// nu(sbar2) = E[Y(1,1) | Sbar2, A1=1]. The or2 bend is the centered square of
// the S2 residual on coordinate 0; its conditional mean given S1 is exactly
// zero, so the nested time-1 mean keeps its linear form.
double nu_fun(const ScenarioSpec& spec, const Eigen::VectorXd& s1,
              const Eigen::VectorXd& s2) {
  double v = spec.alpha0.head(spec.d1).dot(s1) + spec.alpha0.tail(spec.d2).dot(s2);
  if (spec.misspec.or2) {
    const Eigen::VectorXd m = s2_mean(spec, s1);
    const double resid = s2[0] - m[0] - spec.s2_shift[0];
    v += spec.w_or2 * (resid * resid - spec.s2_noise_sd * spec.s2_noise_sd);
  }
  return v;
}

double pi_fun(const ScenarioSpec& spec, const Eigen::VectorXd& s1) {
  double u = spec.gamma0.dot(s1);
  if (spec.misspec.ps1) u += spec.w_ps1 * ps1_feature(s1);
  return clamp_prob(logistic(u), spec.c0);
}

double rho_fun(const ScenarioSpec& spec, const Eigen::VectorXd& s1,
               const Eigen::VectorXd& s2) {
  double u = spec.delta0.head(spec.d1).dot(s1) + spec.delta0.tail(spec.d2).dot(s2);
  if (spec.misspec.ps2) u += spec.w_ps2 * ps2_feature(s1, s2);
  return clamp_prob(logistic(u), spec.c0);
}

// True time-1 outcome coefficient implied by the linear chain:
// beta0 = alpha_s1 + Cross' alpha_s2 + (alpha_s2' tau) e_0. Exact only when
// the S2|S1 mean is linear (or1 not bent).
Eigen::VectorXd derived_beta0(const ScenarioSpec& spec) {
  Eigen::VectorXd beta = spec.alpha0.head(spec.d1);
  const Eigen::VectorXd alpha_s2 = spec.alpha0.tail(spec.d2);
  for (const auto& c : spec.s2_cross)
    beta[c.s1_index] += c.weight * alpha_s2[c.s2_index];
  beta[0] += alpha_s2.dot(spec.s2_shift);
  return beta;
}

}  // namespace

Dataset generate_data(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  Dataset data;
  data.y.resize(spec.n);
  data.a1.resize(spec.n);
  data.a2.resize(spec.n);
  data.s1.resize(spec.n, spec.d1);
  data.s2.resize(spec.n, spec.d2);

  Eigen::VectorXd s1(spec.d1), xi(spec.d2);
  for (int i = 0; i < spec.n; ++i) {
    // Fixed draw order per row: covariates and potential-outcome noise come
    // before the treatment-assignment uniforms.
    s1[0] = 1.0;
    for (int j = 1; j < spec.d1; ++j) s1[j] = rng.normal();
    for (int j = 0; j < spec.d2; ++j) xi[j] = spec.s2_noise_sd * rng.normal();
    const double eps = spec.noise_sd * rng.normal();
    const double u_a1 = rng.uniform();
    const double u_a2 = rng.uniform();

    const Eigen::VectorXd m = s2_mean(spec, s1);
    const int a1 = (u_a1 < pi_fun(spec, s1)) ? 1 : 0;
    const Eigen::VectorXd s2 = m + xi + (a1 == 1 ? spec.s2_shift
                                                 : Eigen::VectorXd::Zero(spec.d2));
    const int a2 = (u_a2 < rho_fun(spec, s1, s2)) ? 1 : 0;

    const double y = nu_fun(spec, s1, s2) - spec.effect_a1 * (1 - a1) -
                     spec.effect_a2 * (1 - a2) + eps;

    data.s1.row(i) = s1;
    data.s2.row(i) = s2;
    data.a1[i] = a1;
    data.a2[i] = a2;
    data.y[i] = y;
  }
  data.validate();
  return data;
}

GroundTruth compute_ground_truth(const ScenarioSpec& spec) {
  spec.validate();
  GroundTruth truth;
  truth.oracle.gamma = spec.gamma0;
  truth.oracle.delta = spec.delta0;
  truth.oracle.alpha = spec.alpha0;
  truth.oracle.beta = derived_beta0(spec);
  truth.exact.gamma = !spec.misspec.ps1;
  truth.exact.delta = !spec.misspec.ps2;
  truth.exact.alpha = !spec.misspec.or2;
  // The time-1 outcome target equals the generating value only when the
  // nested mean is linear and at least one time-2 model is correct.
  truth.exact.beta =
      !spec.misspec.or1 && (!spec.misspec.ps2 || !spec.misspec.or2);

  if (!spec.misspec.or1) {
    // Linear chain: theta = beta0' E[S1] = beta0[0]; the centered or2
    // quadratic integrates to zero exactly.
    truth.theta_true = truth.oracle.beta[0];
    truth.mc_se = 0.0;
    return truth;
  }

  const long n_mc = 1000000;
  Rng rng(splitmix64(spec.seed ^ 0xA5F152E9D3B6C710ull));
  Eigen::VectorXd s1(spec.d1), xi(spec.d2);
  double sum = 0.0, sumsq = 0.0;
  for (long it = 0; it < n_mc; ++it) {
    s1[0] = 1.0;
    for (int j = 1; j < spec.d1; ++j) s1[j] = rng.normal();
    for (int j = 0; j < spec.d2; ++j) xi[j] = spec.s2_noise_sd * rng.normal();
    const Eigen::VectorXd s2 = s2_mean(spec, s1) + spec.s2_shift + xi;
    const double v = nu_fun(spec, s1, s2);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n_mc;
  const double var = std::max(sumsq / n_mc - mean * mean, 0.0);
  truth.theta_true = mean;
  truth.mc_se = std::sqrt(var / n_mc);
  return truth;
}

std::pair<Dataset, GroundTruth> generate(const ScenarioSpec& spec) {
  return {generate_data(spec, spec.seed), compute_ground_truth(spec)};
}

NuisanceParams oracle_eta(const ScenarioSpec& spec, long n_pop) {
  ScenarioSpec pop = spec;
  if (n_pop < 100) throw DataError("oracle_eta: n_pop too small");
  pop.n = static_cast<int>(n_pop);
  const Dataset data = generate_data(pop, derive_seed(spec.seed, 0x0FACEull));
  const Subsample all = gather_all(data);

  SolverConfig cfg;
  cfg.lambda = 0.0;
  cfg.tol = 1e-9;
  cfg.max_iter = 50000;

  auto run = [&](LossKind kind, std::vector<Eigen::VectorXd> frozen,
                 const char* stage) {
    LossProblem problem(kind, all, std::move(frozen));
    const SolveResult r = solve(problem, cfg);
    if (!r.converged)
      throw std::runtime_error(std::string("oracle_eta: ") + stage +
                               " solve did not converge (kkt " +
                               std::to_string(r.kkt_violation) + ")");
    return r.coef;
  };

  NuisanceParams eta;
  eta.gamma = run(LossKind::L1Ps1, {}, "gamma");
  eta.delta = run(LossKind::L2Ps2, {eta.gamma}, "delta");
  eta.alpha = run(LossKind::L3Or2, {eta.gamma, eta.delta}, "alpha");
  eta.beta = run(LossKind::L4Or1, {eta.gamma, eta.delta, eta.alpha}, "beta");
  return eta;
}

}  // namespace seqdr
