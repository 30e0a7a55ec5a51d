#include "seqdr/json_io.hpp"

#include <fstream>

#include "seqdr/errors.hpp"

namespace seqdr {

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw DataError(std::string(what) + " must be an array");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

MisspecFlags misspec_from_json(const json& j) {
  MisspecFlags f;
  f.ps1 = j.value("ps1", false);
  f.ps2 = j.value("ps2", false);
  f.or2 = j.value("or2", false);
  f.or1 = j.value("or1", false);
  return f;
}

MisspecFlags pattern_from_string(const std::string& s) {
  if (s == "all_correct") return misspec_for(CanPattern::AllCorrect);
  if (s == "a" || s == "or_both_correct")
    return misspec_for(CanPattern::OrBothCorrect);
  if (s == "b" || s == "ps_both_correct")
    return misspec_for(CanPattern::PsBothCorrect);
  if (s == "c" || s == "or1_ps2_correct")
    return misspec_for(CanPattern::Or1Ps2Correct);
  if (s == "d" || s == "or2_ps1_correct")
    return misspec_for(CanPattern::Or2Ps1Correct);
  throw DataError("unknown scenario pattern '" + s + "'");
}

std::string family_to_string(NuisanceFamily f) {
  return f == NuisanceFamily::MomentTargeted ? "moment" : "baseline";
}

NuisanceFamily family_from_string(const std::string& s) {
  if (s == "moment") return NuisanceFamily::MomentTargeted;
  if (s == "baseline") return NuisanceFamily::Baseline;
  throw DataError("unknown nuisance family '" + s + "' (moment|baseline)");
}

}  // namespace

json scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["d1"] = spec.d1;
  j["d2"] = spec.d2;
  j["s_gamma"] = spec.s_gamma;
  j["s_delta"] = spec.s_delta;
  j["s_alpha"] = spec.s_alpha;
  j["s_beta"] = spec.s_beta;
  j["gamma0"] = vec_to_json(spec.gamma0);
  j["delta0"] = vec_to_json(spec.delta0);
  j["alpha0"] = vec_to_json(spec.alpha0);
  json crosses = json::array();
  for (const auto& c : spec.s2_cross)
    crosses.push_back(
        {{"s2_index", c.s2_index}, {"s1_index", c.s1_index}, {"weight", c.weight}});
  j["s2_cross"] = crosses;
  j["s2_shift"] = vec_to_json(spec.s2_shift);
  j["s2_noise_sd"] = spec.s2_noise_sd;
  j["noise_sd"] = spec.noise_sd;
  j["misspec"] = {{"ps1", spec.misspec.ps1},
                  {"ps2", spec.misspec.ps2},
                  {"or2", spec.misspec.or2},
                  {"or1", spec.misspec.or1}};
  j["w_ps1"] = spec.w_ps1;
  j["w_ps2"] = spec.w_ps2;
  j["w_or2"] = spec.w_or2;
  j["w_or1"] = spec.w_or1;
  j["c0"] = spec.c0;
  j["allow_violation"] = spec.allow_violation;
  j["seed"] = spec.seed;
  j["effect_a1"] = spec.effect_a1;
  j["effect_a2"] = spec.effect_a2;
  return j;
}

ScenarioSpec scenario_from_json(const json& j) {
  ScenarioSpec spec;
  const int n = j.value("n", 2000);
  const int d1 = j.value("d1", 100);
  const int d2 = j.value("d2", 100);
  const int sg = j.value("s_gamma", 4);
  const int sd = j.value("s_delta", 4);
  const int sa = j.value("s_alpha", 4);
  const std::uint64_t seed = j.value("seed", std::uint64_t{1});

  if (j.contains("gamma0")) {
    spec.n = n;
    spec.d1 = d1;
    spec.d2 = d2;
    spec.s_gamma = sg;
    spec.s_delta = sd;
    spec.s_alpha = sa;
    spec.s_beta = j.value("s_beta", sa);
    spec.seed = seed;
    spec.gamma0 = vec_from_json(j.at("gamma0"), "gamma0");
    spec.delta0 = vec_from_json(j.at("delta0"), "delta0");
    spec.alpha0 = vec_from_json(j.at("alpha0"), "alpha0");
    if (j.contains("s2_cross"))
      for (const auto& c : j.at("s2_cross"))
        spec.s2_cross.push_back({c.at("s2_index").get<int>(),
                                 c.at("s1_index").get<int>(),
                                 c.at("weight").get<double>()});
    spec.s2_shift = j.contains("s2_shift")
                        ? vec_from_json(j.at("s2_shift"), "s2_shift")
                        : Eigen::VectorXd::Zero(d2);
  } else {
    spec = default_scenario(n, d1, d2, sg, sd, sa, seed);
  }

  spec.s2_noise_sd = j.value("s2_noise_sd", spec.s2_noise_sd);
  spec.noise_sd = j.value("noise_sd", spec.noise_sd);
  if (j.contains("pattern"))
    spec.misspec = pattern_from_string(j.at("pattern").get<std::string>());
  if (j.contains("misspec")) spec.misspec = misspec_from_json(j.at("misspec"));
  spec.w_ps1 = j.value("w_ps1", spec.w_ps1);
  spec.w_ps2 = j.value("w_ps2", spec.w_ps2);
  spec.w_or2 = j.value("w_or2", spec.w_or2);
  spec.w_or1 = j.value("w_or1", spec.w_or1);
  spec.c0 = j.value("c0", spec.c0);
  spec.allow_violation = j.value("allow_violation", spec.allow_violation);
  spec.effect_a1 = j.value("effect_a1", spec.effect_a1);
  spec.effect_a2 = j.value("effect_a2", spec.effect_a2);
  spec.validate();
  return spec;
}

json estimator_to_json(const NamedEstimator& est) {
  const EstimatorChoice& c = est.choice;
  json j;
  j["name"] = est.name;
  j["family"] = family_to_string(c.family);
  j["lambda_scales"] = c.lambda_scales;
  j["overlap"] = {{"c0", c.overlap.c0},
                  {"clip_propensities", c.overlap.clip_propensities}};
  j["solver"] = {{"max_iter", c.solver.max_iter},
                 {"tol", c.solver.tol},
                 {"backtrack_shrink", c.solver.backtrack_shrink},
                 {"init_step", c.solver.init_step},
                 {"penalize_intercept", c.solver.penalize_intercept}};
  j["lambda_grid"] = c.lambda_grid;
  j["strict"] = c.strict;
  return j;
}

NamedEstimator estimator_from_json(const json& j) {
  NamedEstimator est;
  est.name = j.value("name", std::string{});
  EstimatorChoice& c = est.choice;
  c.family = family_from_string(j.value("family", std::string{"moment"}));
  if (j.contains("lambda_scales")) {
    const auto& arr = j.at("lambda_scales");
    if (!arr.is_array() || arr.size() != 4)
      throw DataError("lambda_scales must have 4 entries");
    for (int i = 0; i < 4; ++i) c.lambda_scales[i] = arr[i].get<double>();
  }
  if (j.contains("overlap")) {
    const auto& o = j.at("overlap");
    c.overlap.c0 = o.value("c0", c.overlap.c0);
    c.overlap.clip_propensities =
        o.value("clip_propensities", c.overlap.clip_propensities);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
    c.solver.tol = s.value("tol", c.solver.tol);
    c.solver.backtrack_shrink =
        s.value("backtrack_shrink", c.solver.backtrack_shrink);
    c.solver.init_step = s.value("init_step", c.solver.init_step);
    c.solver.penalize_intercept =
        s.value("penalize_intercept", c.solver.penalize_intercept);
  }
  if (j.contains("lambda_grid"))
    c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  c.strict = j.value("strict", false);
  return est;
}

json study_config_to_json(const StudyConfig& config) {
  json j;
  j["scenario"] = scenario_to_json(config.scenario);
  json ests = json::array();
  for (const auto& e : config.estimators) ests.push_back(estimator_to_json(e));
  j["estimators"] = ests;
  j["replications"] = config.replications;
  j["level"] = config.level;
  j["base_seed"] = config.base_seed;
  j["k_folds"] = config.k_folds;
  j["output_path"] = config.output_path;
  j["parallelism"] = config.parallelism;
  return j;
}

StudyConfig study_config_from_json(const json& j) {
  StudyConfig config;
  config.scenario = scenario_from_json(j.at("scenario"));
  if (!j.contains("estimators") || !j.at("estimators").is_array() ||
      j.at("estimators").empty())
    throw DataError("study config: nonempty estimators array required");
  for (const auto& e : j.at("estimators"))
    config.estimators.push_back(estimator_from_json(e));
  config.replications = j.value("replications", 100);
  config.level = j.value("level", 0.95);
  config.base_seed = j.value("base_seed", std::uint64_t{1});
  config.k_folds = j.value("k_folds", 2);
  config.output_path = j.value("output_path", std::string{});
  config.parallelism = j.value("parallelism", 0);
  config.validate();
  return config;
}

json study_result_to_json(const StudyResult& result) {
  json j;
  j["theta_true"] = result.theta_true;
  j["theta_mc_se"] = result.theta_mc_se;
  j["replications"] = result.replications;
  j["level"] = result.level;
  j["base_seed"] = result.base_seed;
  j["k_folds"] = result.k_folds;
  json ests = json::array();
  const char* stage_names[4] = {"gamma", "delta", "alpha", "beta"};
  for (const auto& e : result.estimators) {
    json je;
    je["name"] = e.name;
    je["family"] = family_to_string(e.family);
    je["n_used"] = e.n_used;
    je["failures"] = e.failures;
    je["bias"] = e.bias;
    je["rmse"] = e.rmse;
    je["coverage"] = e.coverage;
    je["mean_ci_length"] = e.mean_ci_length;
    je["mean_sigma_hat"] = e.mean_sigma_hat;
    je["sd_theta_hat"] = e.sd_theta_hat;
    je["se_mean_theta"] = e.se_mean_theta;
    json nuis;
    for (int c = 0; c < 4; ++c)
      nuis[stage_names[c]] =
          e.nuisance_exact[c] ? json(e.nuisance_l2[c]) : json(nullptr);
    je["nuisance_l2"] = nuis;
    ests.push_back(je);
  }
  j["estimators"] = ests;
  return j;
}

json report_to_json(const EstimateReport& report) {
  json j;
  j["theta_hat"] = report.theta_hat;
  j["sigma_hat"] = report.sigma_hat;
  j["ci"] = {report.ci_low, report.ci_high};
  j["level"] = report.level;
  j["n"] = report.n;
  j["k_folds"] = report.k_folds;
  j["seed"] = report.seed;
  j["path"] = {report.path.a1, report.path.a2};
  if (report.control_path)
    j["control_path"] = {report.control_path->a1, report.control_path->a2};
  j["nuisance_family"] = family_to_string(report.family);
  j["diagnostics"] = {
      {"clipped", report.diagnostics.clipped},
      {"nonconverged_stages", report.diagnostics.nonconverged_stages},
      {"saturated_evals", report.diagnostics.saturated_evals},
      {"sigma_degenerate", report.diagnostics.sigma_degenerate}};
  json lambdas = json::array();
  for (const auto& fold : report.per_fold)
    lambdas.push_back({fold.stages[0].lambda, fold.stages[1].lambda,
                       fold.stages[2].lambda, fold.stages[3].lambda});
  j["per_fold_lambdas"] = lambdas;
  return j;
}

json eta_to_json(const NuisanceParams& eta) {
  json j;
  j["gamma"] = vec_to_json(eta.gamma);
  j["delta"] = vec_to_json(eta.delta);
  j["alpha"] = vec_to_json(eta.alpha);
  j["beta"] = vec_to_json(eta.beta);
  return j;
}

NuisanceParams eta_from_json(const json& j, int d1, int d) {
  NuisanceParams eta;
  eta.gamma = vec_from_json(j.at("gamma"), "gamma");
  eta.delta = vec_from_json(j.at("delta"), "delta");
  eta.alpha = vec_from_json(j.at("alpha"), "alpha");
  eta.beta = vec_from_json(j.at("beta"), "beta");
  eta.validate(d1, d);
  return eta;
}

json ground_truth_to_json(const GroundTruth& truth) {
  json j;
  j["theta_true"] = truth.theta_true;
  j["mc_se"] = truth.mc_se;
  j["oracle"] = eta_to_json(truth.oracle);
  j["exact"] = {{"gamma", truth.exact.gamma},
                {"delta", truth.exact.delta},
                {"alpha", truth.exact.alpha},
                {"beta", truth.exact.beta}};
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open JSON file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("JSON parse error in " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace seqdr
