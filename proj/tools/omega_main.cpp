#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "omega/commands.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--set", args.sets, "dotted-path override, e.g. train.r=0 (repeatable)");
  cmd->add_option("--seed", args.seed, "override train.seed");
  auto* out = cmd->add_option("--out", args.out_dir, "output directory");
  if (out_required) out->required();
}

omega::ExperimentConfig load(const CommonArgs& args) {
  omega::ExperimentConfig cfg = omega::load_config(args.config_path, args.sets, args.seed);
  if (!args.out_dir.empty()) cfg.eval.out_dir = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imbalanced open-set domain adaptation experiments"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, ablate_args;
  bool force = false;
  bool dump_clusters = false;

  CLI::App* generate = app.add_subcommand("generate", "emit synthetic dataset CSVs");
  add_common(generate, gen_args, true);
  generate->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI::App* train = app.add_subcommand("train", "train a model and log metrics");
  add_common(train, train_args, false);
  train->add_flag("--dump-clusters", dump_clusters,
                  "write per-epoch cluster assignments for debugging");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_args, false);

  CLI::App* ablate = app.add_subcommand("ablate", "run the ablation grid over seeds");
  add_common(ablate, ablate_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      omega::cmd_generate(load(gen_args), gen_args.out_dir, force);
    } else if (train->parsed()) {
      omega::TrainOutcome outcome = omega::cmd_train(load(train_args), dump_clusters);
      std::cout << "run directory: " << outcome.run_dir << "\n";
      if (outcome.final_metrics) {
        std::cout << outcome.final_metrics->to_key_value();
      }
    } else if (eval->parsed()) {
      std::cout << omega::cmd_eval(load(eval_args)).to_key_value();
    } else if (ablate->parsed()) {
      omega::cmd_ablate(load(ablate_args));
    }
  } catch (const omega::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const omega::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const omega::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
