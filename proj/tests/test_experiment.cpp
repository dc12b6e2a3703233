#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpseek/experiment.hpp"

using namespace helpseek;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = HELPSEEK_SOURCE_DIR;

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("helpseek_experiment_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // A config small enough to run the whole pipeline in well under a second.
  fs::path small_config(const Json& extra = Json::object()) const {
    Json doc = {{"preset", "default"},
                {"seed", 3},
                {"output_dir", "out"},
                {"warmstart", {{"num_questions", 60}}},
                {"train",
                 {{"steps", 4}, {"batch_questions", 4}, {"eval_every", 2}, {"validation_questions", 16}}},
                {"eval", {{"num_questions", 40}, {"samples_per_question", 2}}}};
    doc.merge_patch(extra);
    const fs::path path = dir_ / "config.json";
    write_json_file(path, doc);
    return path;
  }

  static int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + HELPSEEK_CLI + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(ExperimentTest, ShippedConfigsLoad) {
  for (const char* name : {"default.json", "oracle.json", "twohop-cold.json"}) {
    const ExperimentConfig c = load_config(kSource / "configs" / name);
    EXPECT_NO_THROW(c.check()) << name;
    EXPECT_EQ(c.world.seed, c.seed);
    EXPECT_EQ(c.train.seed, c.seed);
    EXPECT_EQ(c.reward.c, c.world.max_searches);
  }
  const ExperimentConfig cold = load_config(kSource / "configs" / "twohop-cold.json");
  EXPECT_FALSE(cold.warmstart_enabled);
  EXPECT_EQ(to_json(cold.world).at("types"), to_json(world_preset("twohop")).at("types"));
}

TEST_F(ExperimentTest, SchemaErrors) {
  EXPECT_THROW(config_from_json(Json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"train", {{"stepz", 1}}}}), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"train", {{"steps", "many"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"preset", "no-such-world"}}), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"reward", {{"variant", "linear"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"warmstart", {{"l_max", 9}}}}), ConfigError);
  EXPECT_THROW(load_config(dir_ / "missing.json"), ConfigError);
}

TEST_F(ExperimentTest, OverridesFlagsBeatEnvironment) {
  ExperimentConfig c = load_config(small_config());
  EXPECT_EQ(c.output_dir, dir_ / "out");
  Overrides env{7, fs::path("env-out"), std::nullopt};
  Overrides flags{9, std::nullopt, std::string("twohop")};
  apply_overrides(c, env, flags);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.world.seed, 9u);
  EXPECT_EQ(c.output_dir, fs::path("env-out"));
  EXPECT_EQ(c.world.num_types(), 2);
}

TEST_F(ExperimentTest, EnvironmentOverrides) {
  ::setenv("HELPSEEK_SEED", "12", 1);
  ::setenv("HELPSEEK_OUT", "/tmp/x", 1);
  const Overrides o = overrides_from_env();
  EXPECT_EQ(o.seed, 12u);
  EXPECT_EQ(o.output_dir, fs::path("/tmp/x"));
  ::setenv("HELPSEEK_SEED", "-3", 1);
  EXPECT_THROW(overrides_from_env(), ConfigError);
  ::setenv("HELPSEEK_SEED", "4x", 1);
  EXPECT_THROW(overrides_from_env(), ConfigError);
  ::unsetenv("HELPSEEK_SEED");
  ::unsetenv("HELPSEEK_OUT");
}

TEST_F(ExperimentTest, ConfigHashIgnoresLocation) {
  ExperimentConfig a = load_config(small_config());
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 99;
  b.resolve();
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST_F(ExperimentTest, PipelineWritesArtifacts) {
  const ExperimentConfig c = load_config(small_config());
  std::ostringstream out;
  cmd_warmstart(c, out);
  cmd_train(c, std::nullopt, out);
  cmd_eval(c, std::nullopt, EvalMode::Search, out);
  cmd_eval(c, std::nullopt, EvalMode::Abstain, out);
  for (const char* f : {kCorpusFile, kInitCheckpoint, kTrainLog, kFinalCheckpoint, kBestCheckpoint, kManifest,
                        "eval_search.json", "eval_search.csv", "eval_abstain.json", "eval_abstain.csv"}) {
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  }
  const Json manifest = read_json_file(c.output_dir / kManifest);
  EXPECT_EQ(manifest.at("status"), "complete");
  const Json search = read_json_file(c.output_dir / "eval_search.json");
  EXPECT_EQ(search.at("config_hash"), config_hash(c));
  std::ifstream log(c.output_dir / kTrainLog);
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 4);
}

TEST_F(ExperimentTest, EvalRefusesForeignCheckpoint) {
  const ExperimentConfig c = load_config(small_config());
  std::ostringstream out;
  cmd_warmstart(c, out);
  ExperimentConfig other = c;
  other.preset = "twohop";
  other.world = world_preset("twohop");
  other.resolve();
  EXPECT_THROW(cmd_eval(other, c.output_dir / kInitCheckpoint, EvalMode::Search, out), ConfigError);
  EXPECT_THROW(cmd_eval(c, dir_ / "nope.json", EvalMode::Search, out), ConfigError);
  EXPECT_THROW(parse_eval_mode("both"), ConfigError);
}

TEST_F(ExperimentTest, CliExitCodes) {
  const std::string cfg = "--config \"" + small_config().string() + "\"";
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("warmstart --config \"" + (dir_ / "missing.json").string() + "\""), 2);
  EXPECT_EQ(cli("eval " + cfg + " --checkpoint \"" + (dir_ / "none.json").string() + "\""), 2);
  EXPECT_EQ(cli("eval " + cfg + " --mode sideways"), 2);
  EXPECT_EQ(cli("reproduce " + cfg + " nothing"), 2);
  EXPECT_EQ(cli("warmstart " + cfg), 0);
  EXPECT_EQ(cli("train " + cfg), 0);
  EXPECT_EQ(cli("eval " + cfg + " --mode abstain"), 0);
  EXPECT_EQ(cli("eval " + cfg + " --preset twohop"), 2);
}

TEST_F(ExperimentTest, CliRerunsAreByteIdentical) {
  const fs::path cfg = small_config();
  auto run = [&](const std::string& out) {
    const std::string common = " --config \"" + cfg.string() + "\" --out \"" + (dir_ / out).string() + "\"";
    EXPECT_EQ(cli("warmstart" + common), 0);
    EXPECT_EQ(cli("train" + common), 0);
    EXPECT_EQ(cli("eval" + common), 0);
    EXPECT_EQ(cli("eval --mode abstain" + common), 0);
  };
  run("a");
  run("b");
  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir_ / "a");
    if (rel == "config.json") continue;
    ASSERT_TRUE(fs::exists(dir_ / "b" / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GE(compared, 10);
}

TEST_F(ExperimentTest, SeedChangesOutputs) {
  const fs::path cfg = small_config();
  const std::string base = " --config \"" + cfg.string() + "\" --out \"";
  EXPECT_EQ(cli("warmstart" + base + (dir_ / "s3").string() + "\""), 0);
  EXPECT_EQ(cli("warmstart --seed 4" + base + (dir_ / "s4").string() + "\""), 0);
  EXPECT_NE(slurp(dir_ / "s3" / kCorpusFile), slurp(dir_ / "s4" / kCorpusFile));
}

TEST(FirstStepWithHelpRate, Scan) {
  TrainResult r;
  for (const double h : {0.1, 0.5, 0.96, 0.9}) {
    TrainLogEntry e;
    e.diagnostics.step = static_cast<int>(r.log.size()) + 1;
    e.diagnostics.help_rate = h;
    r.log.push_back(e);
  }
  EXPECT_EQ(first_step_with_help_rate(r, 0.95), 3);
  EXPECT_EQ(first_step_with_help_rate(r, 0.5), 2);
  EXPECT_FALSE(first_step_with_help_rate(r, 0.99).has_value());
}
