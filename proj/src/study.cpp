#include "seqdr/study.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "seqdr/errors.hpp"
#include "seqdr/stats.hpp"

namespace seqdr {

void StudyConfig::validate() const {
  scenario.validate();
  if (replications < 1) throw DataError("study: replications must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw DataError("study: level must be in (0,1)");
  if (estimators.empty()) throw DataError("study: at least one estimator required");
  if (k_folds < 2) throw DataError("study: k_folds must be >= 2");
  for (const auto& e : estimators) e.choice.validate();
}

namespace {

struct RepOutcome {
  bool ok = false;
  double theta = 0.0;
  double sigma = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  bool covered = false;
  std::array<double, 4> nuis_l2{0, 0, 0, 0};
};

int resolve_parallelism(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SEQDR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

double component_l2(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  return (est - truth).norm();
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  const GroundTruth truth = compute_ground_truth(config.scenario);
  const int r_total = config.replications;
  const int n_est = static_cast<int>(config.estimators.size());
  const double cover_lo = truth.theta_true - 2.0 * truth.mc_se;
  const double cover_hi = truth.theta_true + 2.0 * truth.mc_se;

  std::vector<std::vector<RepOutcome>> results(
      r_total, std::vector<RepOutcome>(n_est));

  auto run_rep = [&](int r) {
    const std::uint64_t data_seed = derive_seed(config.base_seed, r);
    const std::uint64_t plan_seed = derive_seed(data_seed, 1);
    Dataset data;
    CrossFitPlan plan;
    try {
      data = generate_data(config.scenario, data_seed);
      plan = make_plan(data.n(), config.k_folds, plan_seed);
    } catch (const std::exception&) {
      return;  // all estimators of this replication count as failures
    }
    for (int e = 0; e < n_est; ++e) {
      try {
        const EstimateReport rep = estimate(data, TreatmentPath{1, 1},
                                            config.estimators[e].choice, plan,
                                            config.level);
        RepOutcome& out = results[r][e];
        out.ok = true;
        out.theta = rep.theta_hat;
        out.sigma = rep.sigma_hat;
        out.ci_low = rep.ci_low;
        out.ci_high = rep.ci_high;
        out.covered = !(rep.ci_high < cover_lo || rep.ci_low > cover_hi);
        const Eigen::VectorXd* oracle[4] = {&truth.oracle.gamma,
                                            &truth.oracle.delta,
                                            &truth.oracle.alpha,
                                            &truth.oracle.beta};
        for (int c = 0; c < 4; ++c) {
          double acc = 0.0;
          const Eigen::VectorXd* fitted[4];
          for (const auto& fold : rep.per_fold) {
            fitted[0] = &fold.eta.gamma;
            fitted[1] = &fold.eta.delta;
            fitted[2] = &fold.eta.alpha;
            fitted[3] = &fold.eta.beta;
            acc += component_l2(*fitted[c], *oracle[c]);
          }
          out.nuis_l2[c] = acc / static_cast<double>(rep.per_fold.size());
        }
      } catch (const std::exception&) {
        results[r][e].ok = false;
      }
    }
  };

  const int threads = std::min(resolve_parallelism(config.parallelism), r_total);
  if (threads <= 1) {
    for (int r = 0; r < r_total; ++r) run_rep(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        int r;
        while ((r = next.fetch_add(1)) < r_total) run_rep(r);
      });
    for (auto& t : pool) t.join();
  }

  StudyResult out;
  out.theta_true = truth.theta_true;
  out.theta_mc_se = truth.mc_se;
  out.replications = r_total;
  out.level = config.level;
  out.base_seed = config.base_seed;
  out.k_folds = config.k_folds;

  for (int e = 0; e < n_est; ++e) {
    EstimatorMetrics m;
    m.name = config.estimators[e].name.empty()
                 ? (config.estimators[e].choice.family ==
                            NuisanceFamily::MomentTargeted
                        ? "moment"
                        : "baseline")
                 : config.estimators[e].name;
    m.family = config.estimators[e].choice.family;

    double sum_t = 0.0, sum_t2 = 0.0, sum_sq_err = 0.0;
    double sum_len = 0.0, sum_sigma = 0.0;
    int hits = 0;
    std::array<double, 4> nuis_sum{0, 0, 0, 0};
    for (int r = 0; r < r_total; ++r) {
      const RepOutcome& o = results[r][e];
      if (!o.ok) {
        ++m.failures;
        continue;
      }
      ++m.n_used;
      sum_t += o.theta;
      sum_t2 += o.theta * o.theta;
      const double err = o.theta - truth.theta_true;
      sum_sq_err += err * err;
      sum_len += o.ci_high - o.ci_low;
      sum_sigma += o.sigma;
      hits += o.covered ? 1 : 0;
      for (int c = 0; c < 4; ++c) nuis_sum[c] += o.nuis_l2[c];
    }
    if (m.failures > r_total / 10)
      throw StudyError("study: estimator '" + m.name + "' failed in " +
                       std::to_string(m.failures) + " of " +
                       std::to_string(r_total) + " replications");
    if (m.n_used > 0) {
      const double k = static_cast<double>(m.n_used);
      const double mean_t = sum_t / k;
      m.bias = mean_t - truth.theta_true;
      m.rmse = std::sqrt(sum_sq_err / k);
      m.coverage = static_cast<double>(hits) / k;
      m.mean_ci_length = sum_len / k;
      m.mean_sigma_hat = sum_sigma / k;
      const double var_t =
          m.n_used > 1 ? std::max(0.0, (sum_t2 - k * mean_t * mean_t) / (k - 1.0))
                       : 0.0;
      m.sd_theta_hat = std::sqrt(var_t);
      m.se_mean_theta = m.sd_theta_hat / std::sqrt(k);
      for (int c = 0; c < 4; ++c) m.nuisance_l2[c] = nuis_sum[c] / k;
    }
    m.nuisance_exact = {truth.exact.gamma, truth.exact.delta,
                        truth.exact.alpha, truth.exact.beta};
    out.estimators.push_back(std::move(m));
  }
  return out;
}

namespace {

std::string fmt6(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

ComparisonTable compare_estimators(const StudyResult& result) {
  if (result.estimators.size() < 2)
    throw std::invalid_argument("compare_estimators: need at least 2 estimators");

  ComparisonTable table;
  table.metrics = {"bias",          "rmse",        "coverage",
                   "mean_ci_length", "mean_sigma_hat", "failures"};
  for (const auto& e : result.estimators) table.estimators.push_back(e.name);

  auto metric_value = [](const EstimatorMetrics& e, int row) -> double {
    switch (row) {
      case 0: return e.bias;
      case 1: return e.rmse;
      case 2: return e.coverage;
      case 3: return e.mean_ci_length;
      case 4: return e.mean_sigma_hat;
      default: return static_cast<double>(e.failures);
    }
  };

  const int rows = static_cast<int>(table.metrics.size());
  const int cols = static_cast<int>(result.estimators.size());
  table.values.assign(rows, std::vector<double>(cols, 0.0));
  table.ratios.assign(rows, std::vector<double>(cols, 1.0));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      table.values[i][j] = metric_value(result.estimators[j], i);
      const double base = table.values[i][0];
      table.ratios[i][j] =
          base == 0.0 ? (table.values[i][j] == 0.0 ? 1.0 : NAN)
                      : table.values[i][j] / base;
    }

  constexpr double kBandLo = 0.91, kBandHi = 0.99;
  for (std::size_t i = 0; i < result.estimators.size(); ++i) {
    const auto& holder = result.estimators[i];
    if (holder.coverage < kBandLo || holder.coverage > kBandHi) continue;
    for (std::size_t j = 0; j < result.estimators.size(); ++j) {
      const auto& loser = result.estimators[j];
      if (j == i || loser.coverage >= kBandLo) continue;
      table.notes.push_back("coverage of '" + loser.name + "' (" +
                            fmt6(loser.coverage) + ") degrades while '" +
                            holder.name + "' (" + fmt6(holder.coverage) +
                            ") holds the nominal band");
    }
  }
  return table;
}

std::string ComparisonTable::to_text() const {
  std::ostringstream os;
  os << "metric";
  for (const auto& e : estimators) os << '\t' << e;
  for (std::size_t j = 1; j < estimators.size(); ++j)
    os << '\t' << estimators[j] << "/" << estimators[0];
  os << '\n';
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    os << metrics[i];
    for (double v : values[i]) os << '\t' << fmt6(v);
    for (std::size_t j = 1; j < estimators.size(); ++j)
      os << '\t' << fmt6(ratios[i][j]);
    os << '\n';
  }
  for (const auto& n : notes) os << "note: " << n << '\n';
  return os.str();
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream os;
  os << "metric";
  for (const auto& e : estimators) os << ',' << e;
  os << '\n';
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    os << metrics[i];
    for (double v : values[i]) os << ',' << fmt6(v);
    os << '\n';
  }
  return os.str();
}

std::string study_table_csv(const StudyResult& result) {
  std::ostringstream os;
  os << "estimator,n_used,failures,bias,rmse,coverage,mean_ci_length,"
        "mean_sigma_hat,sd_theta_hat,gamma_l2,delta_l2,alpha_l2,beta_l2\n";
  for (const auto& e : result.estimators) {
    os << e.name << ',' << e.n_used << ',' << e.failures << ',' << fmt6(e.bias)
       << ',' << fmt6(e.rmse) << ',' << fmt6(e.coverage) << ','
       << fmt6(e.mean_ci_length) << ',' << fmt6(e.mean_sigma_hat) << ','
       << fmt6(e.sd_theta_hat);
    for (int c = 0; c < 4; ++c)
      os << ',' << (e.nuisance_exact[c] ? fmt6(e.nuisance_l2[c]) : "NA");
    os << '\n';
  }
  return os.str();
}

}  // namespace seqdr
