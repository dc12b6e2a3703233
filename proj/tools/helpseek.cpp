// helpseek: warm-start, train, evaluate and reproduce help-seeking policies.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "helpseek/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config (JSON)");
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out, "override the output directory");
  cmd->add_option("--preset", flags.preset, "world preset name or JSON path");
}

helpseek::ExperimentConfig resolve_config(const CommonFlags& flags) {
  helpseek::ExperimentConfig config;
  if (!flags.config_path.empty()) {
    config = helpseek::load_config(flags.config_path);
  } else {
    config.resolve();
  }
  helpseek::Overrides cli;
  cli.seed = flags.seed;
  if (flags.out) cli.output_dir = *flags.out;
  cli.preset = flags.preset;
  helpseek::apply_overrides(config, helpseek::overrides_from_env(), cli);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective help-seeking policies on a synthetic QA world"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string checkpoint;
  std::string mode = "search";
  std::string experiment;

  auto* warm = app.add_subcommand("warmstart", "build the warm-start corpus and initial policy");
  add_common(warm, flags);

  auto* train = app.add_subcommand("train", "run GRPO from the initial checkpoint");
  add_common(train, flags);
  train->add_option("--checkpoint", checkpoint, "initial checkpoint (default: <out>/init_policy.json)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test questions");
  add_common(eval, flags);
  eval->add_option("--checkpoint", checkpoint, "checkpoint (default: <out>/best_policy.json)");
  eval->add_option("--mode", mode, "search or abstain")->check(CLI::IsMember({"search", "abstain"}));

  auto* repro = app.add_subcommand("reproduce", "run a canned experiment suite");
  add_common(repro, flags);
  repro->add_option("name", experiment, "selective | oracle-collapse | warmstart-ablation | severity-sweep")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto config = resolve_config(flags);
    const auto ckpt = checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoint);
    if (warm->parsed()) {
      helpseek::cmd_warmstart(config, std::cout);
    } else if (train->parsed()) {
      helpseek::cmd_train(config, ckpt, std::cout);
    } else if (eval->parsed()) {
      helpseek::cmd_eval(config, ckpt, helpseek::parse_eval_mode(mode), std::cout);
    } else if (repro->parsed()) {
      helpseek::cmd_reproduce(config, experiment, std::cout);
    }
  } catch (const helpseek::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const helpseek::TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << "\n" << e.dump();
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
