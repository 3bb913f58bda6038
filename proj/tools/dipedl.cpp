// Command-line front end: train models, evaluate (ID, OOD) pairs, run the
// toggle-ablation grid, and execute the verification suite.
//
// Exit codes: 0 success, 1 validation error, 2 verification failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dipedl/harness.hpp"
#include "dipedl/run_config.hpp"
#include "dipedl/verify.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "runs/default";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "Config file (key=value lines)");
  cmd->add_option("--set", args->overrides,
                  "Inline override key=value (repeatable)");
  cmd->add_option("--out", args->out_dir, "Run/output directory");
  cmd->add_option("--seed", args->seed, "Random seed (overrides config)")
      ->each([args](const std::string&) { args->seed_given = true; });
}

dipedl::RunConfig resolve_config(const CommonArgs& args) {
  std::vector<std::string> overrides = args.overrides;
  if (args.seed_given) overrides.push_back("seed=" + std::to_string(args.seed));
  return dipedl::parse_config(args.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential classification with density-informed pseudo-counts"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train classifier (and density model)");
  add_common(train, &train_args);

  CommonArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate an (ID, OOD) pair");
  add_common(eval, &eval_args);

  CommonArgs ablate_args;
  CLI::App* ablate = app.add_subcommand("ablate", "Run the toggle-ablation grid");
  add_common(ablate, &ablate_args);

  std::uint64_t verify_seed = 0;
  CLI::App* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--seed", verify_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      const dipedl::RunConfig config = resolve_config(train_args);
      const dipedl::TrainOutputs out = dipedl::cmd_train(config, train_args.out_dir);
      std::printf("trained %s model: final mean loss %.6g\n", config.mode.c_str(),
                  out.final_loss);
      std::printf("classifier: %s\n", out.classifier_path.c_str());
      if (!out.density_path.empty()) {
        std::printf("density:    %s\n", out.density_path.c_str());
      }
      std::printf("log:        %s\n", out.train_log_path.c_str());
      return 0;
    }
    if (eval->parsed()) {
      const dipedl::RunConfig config = resolve_config(eval_args);
      const dipedl::EvalOutputs out =
          dipedl::cmd_eval(config, eval_args.out_dir, eval_args.out_dir);
      std::printf("accuracy %.4f  brier_id %.4f  brier_ood %.4f  auroc %.4f  aupr %.4f\n",
                  out.report.accuracy, out.report.brier_id, out.report.brier_ood,
                  out.report.auroc, out.report.aupr);
      std::printf("metrics: %s\n", out.metrics_csv.c_str());
      std::printf("scores:  %s\n", out.scores_csv.c_str());
      return 0;
    }
    if (ablate->parsed()) {
      const dipedl::RunConfig config = resolve_config(ablate_args);
      const dipedl::AblationOutputs out =
          dipedl::cmd_ablate(config, ablate_args.out_dir);
      std::printf("n  de nn accuracy brier_id brier_ood auroc  aupr\n");
      for (const dipedl::AblationRow& row : out.rows) {
        std::printf("%d  %d  %d  %.4f   %.4f   %.4f    %.4f %.4f\n",
                    row.use_n ? 1 : 0, row.use_de ? 1 : 0, row.use_nn ? 1 : 0,
                    row.report.accuracy, row.report.brier_id, row.report.brier_ood,
                    row.report.auroc, row.report.aupr);
      }
      std::printf("grid: %s\n", out.ablation_csv.c_str());
      return 0;
    }
    if (verify->parsed()) {
      const std::vector<dipedl::CheckResult> results =
          dipedl::run_verification(dipedl::RandomSeed{verify_seed});
      bool all_passed = true;
      for (const dipedl::CheckResult& r : results) {
        std::printf("[%s] %s — %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        if (!r.passed) all_passed = false;
      }
      return all_passed ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
