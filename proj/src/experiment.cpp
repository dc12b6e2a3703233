#include "helpseek/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace helpseek {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;
constexpr std::uint64_t kProfileStream = 0x70726f66ULL;
constexpr std::string_view kWhat = "experiment config";

std::string fixed(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string fixed(const std::optional<double>& v, int precision = 4) {
  return v ? fixed(*v, precision) : std::string("n/a");
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("output directory " + dir.string() + " cannot be created: " + ec.message());
  }
  const fs::path probe = dir / ".write-test";
  {
    std::ofstream test(probe);
    if (!test) throw ConfigError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

Json artifact_meta(const ExperimentConfig& config) {
  return {{"config_hash", config_hash(config)}, {"seed", config.seed}};
}

std::string csv_meta(const ExperimentConfig& config) {
  return "# config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed) + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PolicyCheckpoint make_checkpoint(const ExperimentConfig& config, const PolicyTable& policy, int step) {
  return {policy, world_hash(config.world), config_hash(config), config.seed, step};
}

PolicyCheckpoint load_checkpoint_for(const ExperimentConfig& config, const fs::path& path,
                                     std::string_view hint) {
  if (!fs::exists(path)) {
    throw ConfigError("checkpoint " + path.string() + " not found" +
                      (hint.empty() ? std::string() : "; " + std::string(hint)));
  }
  PolicyCheckpoint ckpt = checkpoint_from_json(read_json_file(path));
  const std::string expected = world_hash(config.world);
  if (ckpt.world_hash != expected) {
    throw ConfigError("checkpoint " + path.string() + " was built for a different world\n" +
                      "  checkpoint world_hash: " + ckpt.world_hash + "\n" +
                      "  configured world_hash: " + expected + " (preset '" + config.preset + "')");
  }
  if (!ckpt.policy.matches(config.world)) {
    throw ConfigError("checkpoint " + path.string() + " has a table shape that does not fit the world");
  }
  return ckpt;
}

std::vector<QuestionSpec> test_questions(const ExperimentConfig& config) {
  return sample_questions(config.world, kTestSplit, config.eval.num_questions);
}

std::uint64_t eval_seed(std::uint64_t seed) { return splitmix64(seed ^ kEvalStream); }

Json train_json(const TrainConfig& t) {
  return {{"group_size", t.group_size},
          {"batch_questions", t.batch_questions},
          {"learning_rate", t.learning_rate},
          {"clip_epsilon", t.clip_epsilon},
          {"entropy_coeff", t.entropy_coeff},
          {"beta_kl", t.beta_kl},
          {"grad_clip_norm", t.grad_clip_norm},
          {"steps", t.steps},
          {"eval_every", t.eval_every},
          {"std_normalize", t.std_normalize},
          {"validation_questions", t.validation_questions},
          {"validation_samples", t.validation_samples}};
}

void read_train(const Json& doc, TrainConfig& t) {
  constexpr std::string_view what = "train section";
  require_keys(doc, what, {},
               {"group_size", "batch_questions", "learning_rate", "clip_epsilon", "entropy_coeff",
                "beta_kl", "grad_clip_norm", "steps", "eval_every", "std_normalize",
                "validation_questions", "validation_samples"});
  auto opt = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = get_as<std::remove_reference_t<decltype(field)>>(doc, key, what);
  };
  opt("group_size", t.group_size);
  opt("batch_questions", t.batch_questions);
  opt("learning_rate", t.learning_rate);
  opt("clip_epsilon", t.clip_epsilon);
  opt("entropy_coeff", t.entropy_coeff);
  opt("beta_kl", t.beta_kl);
  opt("grad_clip_norm", t.grad_clip_norm);
  opt("steps", t.steps);
  opt("eval_every", t.eval_every);
  opt("std_normalize", t.std_normalize);
  opt("validation_questions", t.validation_questions);
  opt("validation_samples", t.validation_samples);
}

// Markdown and CSV renderings of one comparison table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::string markdown() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
      os << "|";
      for (const auto& c : cells) os << " " << c << " |";
      os << "\n";
    };
    line(header);
    os << "|";
    for (std::size_t i = 0; i < header.size(); ++i) os << "---|";
    os << "\n";
    for (const auto& r : rows) line(r);
    return os.str();
  }

  [[nodiscard]] std::string csv() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
  }
};

std::string help_rate_csv(const std::vector<RunSummary>& runs) {
  std::ostringstream os;
  os << "run,step,help_rate,mean_tc,mean_reward\n";
  for (const auto& run : runs) {
    for (const auto& e : run.result.log) {
      const auto& d = e.diagnostics;
      os << run.label << "," << d.step << "," << fixed(d.help_rate) << "," << fixed(d.mean_tc) << ","
         << fixed(d.mean_reward) << "\n";
    }
  }
  return os.str();
}

RunSpec base_spec(const ExperimentConfig& config, const std::string& preset, RewardVariant variant,
                  bool warm, std::uint64_t seed) {
  RunSpec spec;
  spec.world = world_preset(preset);
  spec.world.seed = seed;
  spec.reward = config.reward;
  spec.reward.variant = variant;
  spec.reward.c = spec.world.max_searches;
  spec.warmstart_enabled = warm;
  spec.warmstart = config.warmstart;
  spec.warmstart.seed = seed;
  spec.train = config.train;
  spec.train.seed = seed;
  spec.label = preset + "/" + std::string(to_string(variant)) + "/" + (warm ? "warm" : "cold") +
               "/seed" + std::to_string(seed);
  return spec;
}

constexpr RewardVariant kVariants[] = {RewardVariant::Otc, RewardVariant::Exp,
                                       RewardVariant::OtcStrict};

}  // namespace

void EvalConfig::check() const {
  if (samples_per_question < 1) throw ConfigError("eval samples_per_question must be >= 1");
  if (num_questions < 1) throw ConfigError("eval num_questions must be >= 1");
  if (k_samples < 1) throw ConfigError("eval k_samples must be >= 1");
  if (!(answerable_threshold >= 0.0 && answerable_threshold < 1.0)) {
    throw ConfigError("eval answerable_threshold must lie in [0, 1)");
  }
}

void ExperimentConfig::resolve() {
  world.seed = seed;
  warmstart.seed = seed;
  train.seed = seed;
  reward.c = reward_c.value_or(world.max_searches);
  check();
}

void ExperimentConfig::check() const {
  world.check();
  reward.check();
  if (warmstart_enabled) warmstart.check(world);
  train.check();
  eval.check();
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

WorldConfig load_world(const std::string& preset, const fs::path& base_dir) {
  const auto names = world_preset_names();
  if (std::find(names.begin(), names.end(), preset) != names.end()) return world_preset(preset);
  fs::path path(preset);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  if (!fs::is_regular_file(path)) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("world preset '" + preset + "' is neither a built-in (" + known +
                      ") nor an existing file (looked for " + path.string() + ")");
  }
  return world_from_json(read_json_file(path));
}

ExperimentConfig config_from_json(const Json& doc, const fs::path& base_dir) {
  require_keys(doc, kWhat, {},
               {"preset", "seed", "output_dir", "reward", "warmstart", "train", "eval"});
  ExperimentConfig c;
  if (doc.contains("preset")) c.preset = get_as<std::string>(doc, "preset", kWhat);
  c.world = load_world(c.preset, base_dir);
  if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed", kWhat);
  if (doc.contains("output_dir")) {
    c.output_dir = get_as<std::string>(doc, "output_dir", kWhat);
    if (c.output_dir.is_relative() && !base_dir.empty()) c.output_dir = base_dir / c.output_dir;
  }

  if (doc.contains("reward")) {
    const Json& r = doc.at("reward");
    constexpr std::string_view what = "reward section";
    require_keys(r, what, {}, {"variant", "lambda", "c"});
    if (r.contains("variant")) {
      c.reward.variant = parse_reward_variant(get_as<std::string>(r, "variant", what));
    }
    if (r.contains("lambda")) c.reward.lambda_decay = get_as<double>(r, "lambda", what);
    if (r.contains("c")) c.reward_c = get_as<int>(r, "c", what);
  }

  if (doc.contains("warmstart")) {
    const Json& w = doc.at("warmstart");
    constexpr std::string_view what = "warmstart section";
    require_keys(w, what, {}, {"enabled", "l_max", "num_samples", "num_questions"});
    if (w.contains("enabled")) c.warmstart_enabled = get_as<bool>(w, "enabled", what);
    if (w.contains("l_max")) c.warmstart.l_max = get_as<int>(w, "l_max", what);
    if (w.contains("num_samples")) c.warmstart.num_samples = get_as<int>(w, "num_samples", what);
    if (w.contains("num_questions")) c.warmstart.num_questions = get_as<int>(w, "num_questions", what);
  }

  if (doc.contains("train")) read_train(doc.at("train"), c.train);

  if (doc.contains("eval")) {
    const Json& e = doc.at("eval");
    constexpr std::string_view what = "eval section";
    require_keys(e, what, {}, {"samples_per_question", "num_questions", "k_samples", "answerable_threshold"});
    if (e.contains("samples_per_question")) {
      c.eval.samples_per_question = get_as<int>(e, "samples_per_question", what);
    }
    if (e.contains("num_questions")) c.eval.num_questions = get_as<int>(e, "num_questions", what);
    if (e.contains("k_samples")) c.eval.k_samples = get_as<int>(e, "k_samples", what);
    if (e.contains("answerable_threshold")) {
      c.eval.answerable_threshold = get_as<double>(e, "answerable_threshold", what);
    }
  }
  c.resolve();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file " + path.string() + " not found");
  return config_from_json(read_json_file(path), path.parent_path());
}

Json to_json(const ExperimentConfig& config) {
  Json reward = {{"variant", to_string(config.reward.variant)},
                 {"lambda", config.reward.lambda_decay},
                 {"c", config.reward.c}};
  Json warm = {{"enabled", config.warmstart_enabled},
               {"l_max", config.warmstart.l_max},
               {"num_samples", config.warmstart.num_samples},
               {"num_questions", config.warmstart.num_questions}};
  Json eval = {{"samples_per_question", config.eval.samples_per_question},
               {"num_questions", config.eval.num_questions},
               {"k_samples", config.eval.k_samples},
               {"answerable_threshold", config.eval.answerable_threshold}};
  return {{"preset", config.preset},
          {"world", to_json(config.world)},
          {"seed", config.seed},
          {"output_dir", config.output_dir.generic_string()},
          {"reward", reward},
          {"warmstart", warm},
          {"train", train_json(config.train)},
          {"eval", eval}};
}

std::string config_hash(const ExperimentConfig& config) {
  Json doc = to_json(config);
  doc.erase("preset");
  doc.erase("output_dir");
  return content_hash(doc);
}

Overrides overrides_from_env() {
  Overrides o;
  if (const char* s = std::getenv("HELPSEEK_SEED"); s != nullptr && *s != '\0') {
    const std::string text(s);
    std::size_t used = 0;
    try {
      o.seed = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.front() == '-') {
      throw ConfigError("HELPSEEK_SEED must be a non-negative integer, got '" + text + "'");
    }
  }
  if (const char* s = std::getenv("HELPSEEK_OUT"); s != nullptr && *s != '\0') o.output_dir = s;
  return o;
}

void apply_overrides(ExperimentConfig& config, const Overrides& env, const Overrides& flags) {
  for (const Overrides* o : {&env, &flags}) {
    if (o->seed) config.seed = *o->seed;
    if (o->output_dir) config.output_dir = *o->output_dir;
    if (o->preset) {
      config.preset = *o->preset;
      config.world = load_world(*o->preset);
    }
  }
  config.resolve();
}

PolicyTable initial_policy(const ExperimentConfig& config, std::vector<CorpusRow>* corpus) {
  if (!config.warmstart_enabled) return PolicyTable::for_world(config.world);
  auto rows = generate_corpus(config.world, config.warmstart);
  PolicyTable policy = behavior_clone(rows, config.world);
  if (corpus != nullptr) *corpus = std::move(rows);
  return policy;
}

// ---------------------------------------------------------------------------

void cmd_warmstart(const ExperimentConfig& config, std::ostream& out) {
  ensure_output_dir(config.output_dir);
  write_json_file(config.output_dir / "config.json", to_json(config));
  std::vector<CorpusRow> corpus;
  const PolicyTable policy = initial_policy(config, &corpus);
  const Json meta = artifact_meta(config);

  if (config.warmstart_enabled) {
    std::ofstream file(config.output_dir / kCorpusFile, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + (config.output_dir / kCorpusFile).string());
    for (const auto& row : corpus) {
      Json j = to_json(row);
      j.update(meta);
      file << j.dump() << '\n';
    }
    if (!file) throw std::runtime_error("write failed: " + (config.output_dir / kCorpusFile).string());
  }
  write_json_file(config.output_dir / kInitCheckpoint, to_json(make_checkpoint(config, policy, 0)));

  out << "config " << config_hash(config) << " seed " << config.seed << "\n";
  if (!config.warmstart_enabled) {
    out << "warm-start disabled: wrote uniform policy to "
        << (config.output_dir / kInitCheckpoint).string() << "\n";
    return;
  }
  std::vector<int> hist(static_cast<std::size_t>(config.warmstart.l_max) + 1, 0);
  int correct = 0;
  for (const auto& row : corpus) {
    ++hist[static_cast<std::size_t>(row.l_target)];
    correct += row.correct ? 1 : 0;
  }
  out << "corpus: " << corpus.size() << " rows, " << correct << " correct -> "
      << (config.output_dir / kCorpusFile).string() << "\n";
  for (std::size_t l = 0; l < hist.size(); ++l) {
    out << "  l=" << l << "  " << std::setw(6) << hist[l] << "  "
        << fixed(static_cast<double>(hist[l]) / static_cast<double>(corpus.size()), 3) << "\n";
  }
  out << "initial policy -> " << (config.output_dir / kInitCheckpoint).string() << "\n";
}

void cmd_train(const ExperimentConfig& config, const std::optional<fs::path>& init_path,
               std::ostream& out) {
  ensure_output_dir(config.output_dir);
  const fs::path init_file = init_path.value_or(config.output_dir / kInitCheckpoint);
  const PolicyCheckpoint init =
      load_checkpoint_for(config, init_file, "run `helpseek warmstart` first or pass --checkpoint");
  write_json_file(config.output_dir / "config.json", to_json(config));

  const fs::path ckpt_dir = config.output_dir / "checkpoints";
  fs::create_directories(ckpt_dir);
  const fs::path log_path = config.output_dir / kTrainLog;
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  const Json meta = artifact_meta(config);

  auto ckpt_name = [](int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%05d.json", step);
    return std::string(buf);
  };

  Json manifest = meta;
  manifest["world_hash"] = world_hash(config.world);
  manifest["init_checkpoint_hash"] = content_hash(to_json(init));
  manifest["steps"] = config.train.steps;
  Json evaluations = Json::array();
  int last_step = 0;

  TrainHooks hooks;
  hooks.on_log = [&](const TrainLogEntry& entry) {
    Json j = to_json(entry);
    j.update(meta);
    log << j.dump() << '\n';
    log.flush();
    last_step = entry.diagnostics.step;
    if (entry.val_tp) {
      out << "step " << std::setw(5) << entry.diagnostics.step << "  val_tp " << fixed(*entry.val_tp)
          << "  val_acc " << fixed(entry.val_accuracy) << "  val_tc " << fixed(entry.val_tc)
          << "  help_rate " << fixed(entry.diagnostics.help_rate) << "\n";
    }
  };
  hooks.on_checkpoint = [&](int step, const PolicyTable& policy, const SearchModeReport& rep) {
    write_json_file(ckpt_dir / ckpt_name(step), to_json(make_checkpoint(config, policy, step)));
    evaluations.push_back({{"step", step},
                           {"checkpoint", "checkpoints/" + ckpt_name(step)},
                           {"val_tp", rep.tool_productivity},
                           {"val_accuracy", rep.accuracy},
                           {"val_tc", rep.mean_tool_calls}});
  };

  TrainResult result;
  try {
    result = train(config.world, init.policy, config.reward, config.train, hooks);
  } catch (const TrainingAborted& e) {
    manifest["status"] = "aborted";
    manifest["error"] = e.what();
    manifest["diagnostics"] = e.dump();
    manifest["last_logged_step"] = last_step;
    manifest["evaluations"] = evaluations;
    write_json_file(config.output_dir / kManifest, manifest);
    throw;
  }

  write_json_file(config.output_dir / kFinalCheckpoint,
                  to_json(make_checkpoint(config, result.final_policy, config.train.steps)));
  write_json_file(config.output_dir / kBestCheckpoint,
                  to_json(make_checkpoint(config, result.best_policy, result.best_step)));
  manifest["status"] = "complete";
  manifest["best_step"] = result.best_step;
  manifest["best_val_tp"] = result.best_val_tp;
  manifest["best_checkpoint"] = kBestCheckpoint;
  manifest["best_step_checkpoint"] = "checkpoints/" + ckpt_name(result.best_step);
  manifest["final_checkpoint"] = kFinalCheckpoint;
  manifest["log"] = kTrainLog;
  manifest["evaluations"] = evaluations;
  write_json_file(config.output_dir / kManifest, manifest);
  out << "best step " << result.best_step << " (val_tp " << fixed(result.best_val_tp) << ") -> "
      << (config.output_dir / kBestCheckpoint).string() << "\n";
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "search") return EvalMode::Search;
  if (name == "abstain") return EvalMode::Abstain;
  throw ConfigError("unknown eval mode '" + std::string(name) + "' (expected search or abstain)");
}

void cmd_eval(const ExperimentConfig& config, const std::optional<fs::path>& checkpoint, EvalMode mode,
              std::ostream& out) {
  ensure_output_dir(config.output_dir);
  const fs::path path = checkpoint.value_or(config.output_dir / kBestCheckpoint);
  const PolicyCheckpoint ckpt =
      load_checkpoint_for(config, path, "run `helpseek train` first or pass --checkpoint");
  const auto questions = test_questions(config);
  const auto seed = eval_seed(config.seed);

  Json meta = artifact_meta(config);
  meta["world_hash"] = world_hash(config.world);
  meta["checkpoint_hash"] = content_hash(to_json(ckpt));
  meta["checkpoint_step"] = ckpt.step;
  meta["num_questions"] = config.eval.num_questions;

  out << "checkpoint step " << ckpt.step << ", " << questions.size() << " test questions x "
      << config.eval.samples_per_question << " samples\n";

  if (mode == EvalMode::Search) {
    const auto rep =
        eval_search_mode(ckpt.policy, config.world, questions, config.eval.samples_per_question, seed);
    Json doc = to_json(rep);
    doc.update(meta);
    write_json_file(config.output_dir / "eval_search.json", doc);
    write_text(config.output_dir / "eval_search.csv", csv_meta(config) + search_buckets_csv(rep));
    out << "  Acc  " << fixed(100.0 * rep.accuracy, 2) << "\n"
        << "  TC   " << fixed(rep.mean_tool_calls, 3) << "\n"
        << "  TP   " << fixed(100.0 * rep.tool_productivity, 2) << "\n";
    static constexpr const char* names[] = {"0", "1", "2+"};
    for (int b = 0; b < 3; ++b) {
      out << "  TC=" << std::left << std::setw(3) << names[b] << std::right
          << fixed(100.0 * rep.buckets[b].fraction, 1) << "%  acc "
          << (rep.buckets[b].accuracy ? fixed(100.0 * *rep.buckets[b].accuracy, 1) : "n/a") << "\n";
    }
    return;
  }

  Rng profile_rng = make_stream(config.seed, {kProfileStream});
  const auto profile = answerability_profile(config.world, questions, config.eval.k_samples,
                                             profile_rng, config.eval.answerable_threshold);
  const auto rep = eval_abstention_mode(ckpt.policy, config.world, questions, profile,
                                        config.eval.samples_per_question, seed);
  Json doc = to_json(rep);
  doc.update(meta);
  write_json_file(config.output_dir / "eval_abstain.json", doc);
  std::ostringstream csv;
  csv << csv_meta(config) << "type,abstain_rate\n";
  for (std::size_t t = 0; t < rep.abstain_rate_by_type.size(); ++t) {
    csv << config.world.types[t].name << "," << fixed(rep.abstain_rate_by_type[t]) << "\n";
  }
  write_text(config.output_dir / "eval_abstain.csv", csv.str());
  auto pct = [](const std::optional<double>& v) { return v ? fixed(*v, 1) : std::string("n/a"); };
  out << "  Acc      " << fixed(100.0 * rep.overall_accuracy, 2) << "\n"
      << "  Prec     " << (rep.precision ? fixed(100.0 * *rep.precision, 2) : "n/a") << "\n"
      << "  Abstain  " << fixed(100.0 * rep.abstain_rate, 1) << "%\n"
      << "  Abs(0)   " << pct(rep.abs0_pct) << "  over " << rep.always_incorrect_questions
      << " questions\n"
      << "  Abs(1)   " << pct(rep.abs1_pct) << "  over " << rep.always_correct_questions
      << " questions\n"
      << "  Delta    " << pct(rep.delta) << "\n";
}

// ---------------------------------------------------------------------------

RunSummary execute_run(const RunSpec& spec) {
  PolicyTable init = PolicyTable::for_world(spec.world);
  if (spec.warmstart_enabled) init = behavior_clone(generate_corpus(spec.world, spec.warmstart), spec.world);
  RunSummary s;
  s.label = spec.label;
  s.spec = spec;
  s.result = train(spec.world, init, spec.reward, spec.train);
  const auto validation = sample_questions(spec.world, kValidationSplit, spec.train.validation_questions);
  s.final_search = eval_search_mode(s.result.final_policy, spec.world, validation,
                                    spec.train.validation_samples, validation_seed(spec.train));
  return s;
}

std::vector<RunSummary> execute_runs(const std::vector<RunSpec>& specs) {
  const std::size_t width = std::max(1U, std::thread::hardware_concurrency());
  std::vector<RunSummary> out;
  out.reserve(specs.size());
  for (std::size_t begin = 0; begin < specs.size(); begin += width) {
    const std::size_t end = std::min(specs.size(), begin + width);
    std::vector<std::future<RunSummary>> pending;
    for (std::size_t i = begin; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, execute_run, std::cref(specs[i])));
    }
    for (auto& f : pending) out.push_back(f.get());
  }
  return out;
}

std::optional<int> first_step_with_help_rate(const TrainResult& result, double threshold) {
  for (const auto& e : result.log) {
    if (e.diagnostics.help_rate >= threshold) return e.diagnostics.step;
  }
  return std::nullopt;
}

std::vector<std::string> reproduce_names() {
  return {"selective", "oracle-collapse", "warmstart-ablation", "severity-sweep"};
}

void cmd_reproduce(const ExperimentConfig& config, std::string_view name, std::ostream& out) {
  const auto names = reproduce_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("unknown experiment '" + std::string(name) +
                      "' (expected selective, oracle-collapse, warmstart-ablation or severity-sweep)");
  }
  const fs::path dir = config.output_dir / std::string(name);
  ensure_output_dir(dir);
  const std::uint64_t seed = config.seed;
  std::vector<RunSpec> specs;
  Table table;

  auto bucket_cells = [](const SearchModeReport& r) {
    return std::vector<std::string>{fixed(100.0 * r.buckets[0].fraction, 1),
                                    fixed(100.0 * r.buckets[1].fraction, 1),
                                    fixed(100.0 * r.buckets[2].fraction, 1)};
  };

  if (name == "selective" || name == "severity-sweep") {
    const bool sweep = name == "severity-sweep";
    for (const auto v : kVariants) {
      specs.push_back(base_spec(config, "default", v, true, seed));
      if (sweep) specs.push_back(base_spec(config, "default", v, false, seed));
    }
    const auto runs = execute_runs(specs);
    table.header = {"run", "Acc", "TC", "TP", "TC=0", "TC=1", "TC=2+", "Abs(0)", "Abs(1)", "Delta",
                    "best_step"};
    for (const auto& run : runs) {
      ExperimentConfig local = config;
      local.world = run.spec.world;
      const auto questions = test_questions(local);
      const auto& policy = run.result.best_policy;
      const auto search = eval_search_mode(policy, run.spec.world, questions,
                                           config.eval.samples_per_question, eval_seed(seed));
      Rng prng = make_stream(seed, {kProfileStream});
      const auto profile = answerability_profile(run.spec.world, questions, config.eval.k_samples,
                                                 prng, config.eval.answerable_threshold);
      const auto abst = eval_abstention_mode(policy, run.spec.world, questions, profile,
                                             config.eval.samples_per_question, eval_seed(seed));
      std::vector<std::string> row = {run.label, fixed(100.0 * search.accuracy, 2),
                                      fixed(search.mean_tool_calls, 3),
                                      fixed(100.0 * search.tool_productivity, 2)};
      for (auto& c : bucket_cells(search)) row.push_back(c);
      row.push_back(fixed(abst.abs0_pct, 1));
      row.push_back(fixed(abst.abs1_pct, 1));
      row.push_back(fixed(abst.delta, 1));
      row.push_back(std::to_string(run.result.best_step));
      table.rows.push_back(row);
    }
    write_text(dir / "help_rate.csv", csv_meta(config) + help_rate_csv(runs));
  } else if (name == "oracle-collapse") {
    for (const auto v : kVariants) {
      for (std::uint64_t k = 0; k < 3; ++k) specs.push_back(base_spec(config, "oracle", v, true, seed + k));
    }
    const auto runs = execute_runs(specs);
    table.header = {"run", "first step help>=0.95", "final help_rate", "val Acc", "val TC", "val TP"};
    for (const auto& run : runs) {
      const auto first = first_step_with_help_rate(run.result, 0.95);
      table.rows.push_back({run.label, first ? std::to_string(*first) : "never",
                            fixed(run.result.log.empty() ? 0.0 : run.result.log.back().diagnostics.help_rate),
                            fixed(100.0 * run.final_search.accuracy, 2),
                            fixed(run.final_search.mean_tool_calls, 3),
                            fixed(100.0 * run.final_search.tool_productivity, 2)});
    }
    write_text(dir / "help_rate.csv", csv_meta(config) + help_rate_csv(runs));
  } else {
    for (const char* preset : {"default", "twohop"}) {
      for (const bool warm : {false, true}) {
        for (std::uint64_t k = 0; k < 3; ++k) {
          specs.push_back(base_spec(config, preset, RewardVariant::OtcStrict, warm, seed + k));
        }
      }
    }
    const auto runs = execute_runs(specs);
    table.header = {"run", "TC=0", "TC=1", "TC=2+", "collapsed", "final val TP", "best val TP"};
    for (const auto& run : runs) {
      std::vector<std::string> row = {run.label};
      for (auto& c : bucket_cells(run.final_search)) row.push_back(c);
      const auto degenerate = degenerate_bucket(run.final_search);
      static constexpr const char* bucket_names[] = {"TC=0", "TC=1", "TC=2+"};
      row.push_back(degenerate ? bucket_names[*degenerate] : "no");
      row.push_back(fixed(100.0 * run.final_search.tool_productivity, 2));
      row.push_back(fixed(100.0 * run.result.best_val_tp, 2));
      table.rows.push_back(row);
    }
    write_text(dir / "help_rate.csv", csv_meta(config) + help_rate_csv(runs));
  }

  write_text(dir / "comparison.md", table.markdown());
  write_text(dir / "comparison.csv", csv_meta(config) + table.csv());
  out << table.markdown();
  out << "reports -> " << dir.string() << "\n";
}

}  // namespace helpseek
