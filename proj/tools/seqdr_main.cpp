#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "seqdr/dataset.hpp"
#include "seqdr/dgp.hpp"
#include "seqdr/errors.hpp"
#include "seqdr/json_io.hpp"
#include "seqdr/pipeline.hpp"
#include "seqdr/study.hpp"

namespace {

seqdr::TreatmentPath parse_path(const std::string& s) {
  if (s.size() != 3 || s[1] != ',' || (s[0] != '0' && s[0] != '1') ||
      (s[2] != '0' && s[2] != '1'))
    throw CLI::ValidationError("--path must be of the form a1,a2 with each in {0,1}");
  return {s[0] - '0', s[2] - '0'};
}

void emit(const seqdr::json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << std::endl;
  else
    seqdr::save_json_file(j, out_path);
}

struct EstimateArgs {
  std::string data_path;
  std::string path = "1,1";
  std::string control_path;
  int folds = 2;
  std::uint64_t seed = 1;
  std::vector<double> lambda_scale;
  std::string family = "moment";
  double level = 0.95;
  double clip = 0.01;
  bool no_clip = false;
  bool penalize_intercept = true;
  std::string out;
};

int run_estimate(const EstimateArgs& args) {
  const seqdr::Dataset data = seqdr::read_csv_file(args.data_path);

  seqdr::EstimatorChoice choice;
  choice.family = args.family == "baseline" ? seqdr::NuisanceFamily::Baseline
                                            : seqdr::NuisanceFamily::MomentTargeted;
  if (!args.lambda_scale.empty()) {
    if (args.lambda_scale.size() != 4)
      throw seqdr::DataError("--lambda-scale needs exactly 4 values");
    for (int i = 0; i < 4; ++i) choice.lambda_scales[i] = args.lambda_scale[i];
  }
  choice.overlap.c0 = args.clip;
  choice.overlap.clip_propensities = !args.no_clip;
  choice.solver.penalize_intercept = args.penalize_intercept;

  const auto plan = seqdr::make_plan(data.n(), args.folds, args.seed);
  const seqdr::TreatmentPath path = parse_path(args.path);
  seqdr::EstimateReport report;
  if (args.control_path.empty()) {
    report = seqdr::estimate(data, path, choice, plan, args.level);
  } else {
    report = seqdr::estimate_dte(data, path, parse_path(args.control_path),
                                 choice, plan, args.level);
  }
  emit(seqdr::report_to_json(report), args.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential doubly robust estimation of dynamic treatment "
               "effects in high dimensions"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* cmd_est = app.add_subcommand(
      "estimate", "Estimate a counterfactual mean from a dataset CSV");
  cmd_est->add_option("--data", est.data_path, "dataset CSV file")->required();
  cmd_est->add_option("--path", est.path, "treatment path a1,a2 (default 1,1)");
  cmd_est->add_option("--control-path", est.control_path,
                      "control path a1,a2; when set, reports the DTE");
  cmd_est->add_option("--folds", est.folds, "number of cross-fitting folds");
  cmd_est->add_option("--seed", est.seed, "fold-plan shuffle seed");
  cmd_est->add_option("--lambda-scale", est.lambda_scale,
                      "4 per-stage penalty scale constants (gamma,delta,alpha,beta)")
      ->delimiter(',');
  cmd_est->add_option("--family", est.family, "nuisance family: moment|baseline")
      ->check(CLI::IsMember({"moment", "baseline"}));
  cmd_est->add_option("--level", est.level, "confidence level");
  cmd_est->add_option("--clip", est.clip, "overlap floor c0 for clipping");
  cmd_est->add_flag("--no-clip", est.no_clip, "disable propensity clipping");
  cmd_est->add_flag("!--no-penalize-intercept", est.penalize_intercept,
                    "exempt the intercept from the L1 penalty");
  cmd_est->add_option("--out", est.out, "output JSON path (default stdout)");

  std::string sim_scenario, sim_out, sim_truth;
  auto* cmd_sim = app.add_subcommand(
      "simulate", "Draw a synthetic dataset from a scenario JSON");
  cmd_sim->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  cmd_sim->add_option("--out", sim_out, "output dataset CSV path")->required();
  cmd_sim->add_option("--truth", sim_truth, "also write ground truth JSON here");

  std::string study_config, study_out, study_table;
  auto* cmd_study = app.add_subcommand(
      "study", "Run a Monte Carlo replication study from a config JSON");
  cmd_study->add_option("--config", study_config, "study config JSON")->required();
  cmd_study->add_option("--out", study_out, "result JSON path (default stdout)");
  cmd_study->add_option("--table", study_table, "also write a CSV metric table");

  std::string oracle_scenario, oracle_out;
  long oracle_npop = 1000000;
  auto* cmd_oracle = app.add_subcommand(
      "oracle", "Compute population nuisance targets for a scenario");
  cmd_oracle->add_option("--scenario", oracle_scenario, "scenario JSON file")
      ->required();
  cmd_oracle->add_option("--n-pop", oracle_npop, "population draw size");
  cmd_oracle->add_option("--out", oracle_out, "output JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_est->parsed()) return run_estimate(est);
    if (cmd_sim->parsed()) {
      const auto spec = seqdr::scenario_from_json(seqdr::load_json_file(sim_scenario));
      const auto [data, truth] = seqdr::generate(spec);
      seqdr::write_csv_file(data, sim_out);
      if (!sim_truth.empty())
        seqdr::save_json_file(seqdr::ground_truth_to_json(truth), sim_truth);
      return 0;
    }
    if (cmd_study->parsed()) {
      auto config = seqdr::study_config_from_json(seqdr::load_json_file(study_config));
      const auto result = seqdr::run_study(config);
      const auto j = seqdr::study_result_to_json(result);
      if (study_out.empty() && !config.output_path.empty())
        study_out = config.output_path;
      emit(j, study_out);
      if (!study_table.empty()) {
        std::ofstream table(study_table);
        if (!table) throw seqdr::DataError("cannot open " + study_table);
        table << seqdr::study_table_csv(result);
      }
      return 0;
    }
    if (cmd_oracle->parsed()) {
      const auto spec =
          seqdr::scenario_from_json(seqdr::load_json_file(oracle_scenario));
      const auto eta = seqdr::oracle_eta(spec, oracle_npop);
      seqdr::json j = seqdr::eta_to_json(eta);
      j["n_pop"] = oracle_npop;
      emit(j, oracle_out);
      return 0;
    }
  } catch (const seqdr::StudyError& e) {
    std::cerr << "study error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}
