#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "helpseek/core.hpp"
#include "helpseek/eval.hpp"
#include "helpseek/grpo.hpp"
#include "helpseek/json_io.hpp"
#include "helpseek/warmstart.hpp"
#include "helpseek/world.hpp"

namespace helpseek {

struct EvalConfig {
  int samples_per_question = 4;
  int num_questions = 1000;
  int k_samples = 10;
  double answerable_threshold = 0.1;

  void check() const;
};

/// One experiment. `seed` is copied into the world, warm-start and trainer
/// seeds when the config is resolved.
struct ExperimentConfig {
  std::string preset = "default";  ///< built-in name or path to a world JSON
  WorldConfig world = world_preset("default");
  RewardConfig reward;
  std::optional<int> reward_c;  ///< defaults to the world's L
  bool warmstart_enabled = true;
  WarmStartConfig warmstart;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path output_dir = "runs/default";
  std::uint64_t seed = 0;

  /// Propagates the seed and reward c, then validates every section.
  void resolve();
  void check() const;
};

/// Resolves a preset reference: built-in names first, then a JSON file
/// relative to `base_dir`. Throws ConfigError when neither exists.
WorldConfig load_world(const std::string& preset, const std::filesystem::path& base_dir = {});

/// Schema-checked load. Unknown keys are rejected; every section is
/// optional. Preset paths resolve relative to the config file.
ExperimentConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved form with the world inlined.
Json to_json(const ExperimentConfig& config);
/// Hash of the resolved form without the preset reference and the output
/// directory, so it depends only on what the run computes.
std::string config_hash(const ExperimentConfig& config);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::string> preset;
};

/// HELPSEEK_SEED and HELPSEEK_OUT.
Overrides overrides_from_env();
/// Applies `env` then `flags` (flags win) and re-resolves.
void apply_overrides(ExperimentConfig& config, const Overrides& env, const Overrides& flags);

/// Warm-started clone, or the uniform table when warm-start is off.
PolicyTable initial_policy(const ExperimentConfig& config,
                           std::vector<CorpusRow>* corpus = nullptr);

// ---------------------------------------------------------------------------
// Subcommands. Each writes into config.output_dir and reports to `out`.

inline constexpr const char* kCorpusFile = "corpus.jsonl";
inline constexpr const char* kInitCheckpoint = "init_policy.json";
inline constexpr const char* kTrainLog = "train_log.jsonl";
inline constexpr const char* kFinalCheckpoint = "final_policy.json";
inline constexpr const char* kBestCheckpoint = "best_policy.json";
inline constexpr const char* kManifest = "manifest.json";

void cmd_warmstart(const ExperimentConfig& config, std::ostream& out);

/// Starts from `init_path` (default: the warm-start checkpoint in the output
/// directory). Rethrows TrainingAborted after writing a failure manifest.
void cmd_train(const ExperimentConfig& config, const std::optional<std::filesystem::path>& init_path,
               std::ostream& out);

enum class EvalMode { Search, Abstain };
EvalMode parse_eval_mode(std::string_view name);

/// Refuses a checkpoint whose world hash differs from the config's world.
void cmd_eval(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint,
              EvalMode mode, std::ostream& out);

std::vector<std::string> reproduce_names();
void cmd_reproduce(const ExperimentConfig& config, std::string_view name, std::ostream& out);

// ---------------------------------------------------------------------------
// Canned runs shared by `reproduce` and the acceptance suite.

struct RunSpec {
  std::string label;
  WorldConfig world;
  RewardConfig reward;
  bool warmstart_enabled = true;
  WarmStartConfig warmstart;
  TrainConfig train;
};

struct RunSummary {
  std::string label;
  RunSpec spec;
  TrainResult result;
  SearchModeReport final_search;  ///< final policy on the validation questions
};

RunSummary execute_run(const RunSpec& spec);
/// Runs independent specs concurrently; results keep the input order.
std::vector<RunSummary> execute_runs(const std::vector<RunSpec>& specs);

/// First logged step whose batch help rate reaches `threshold`.
std::optional<int> first_step_with_help_rate(const TrainResult& result, double threshold);

}  // namespace helpseek
