// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "helpseek/experiment.hpp"
#include "helpseek/protocol.hpp"
#include "fuzz.hpp"

using namespace helpseek;
namespace fs = std::filesystem;

namespace {

// AC1
constexpr double kRewardTol = 1e-9;
// AC2
constexpr double kTpTol = 1e-6;
// AC3
constexpr double kAdvantageTol = 1e-9;
constexpr int kFuzzGroups = 1000;
constexpr int kGroupSize = 16;
// AC4
constexpr double kUnknownSearchMin = 0.80;
constexpr double kKnownSearchMax = 0.20;
constexpr double kDeltaMin = 40.0;
constexpr double kAbs0Min = 70.0;
// AC5
constexpr double kCollapseHelpRate = 0.95;
constexpr int kCollapseWithin = 50;
// AC6
constexpr double kDegenerateBucket = 0.95;
constexpr int kMinColdCollapses = 2;
// AC7
constexpr int kCorpusQuestions = 3000;
constexpr double kUniformTol = 0.03;
constexpr double kMinBucket = 0.15;
constexpr double kClonedDeltaMax = 10.0;
// AC8
constexpr int kRoundTrips = 10000;

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr std::uint64_t kEvalSeed = 0xacce97;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunSpec spec_for(const std::string& preset, RewardVariant variant, bool warm, std::uint64_t seed,
                 int steps) {
  const ExperimentConfig defaults;
  RunSpec s;
  s.label = preset + "/" + std::string(to_string(variant)) + (warm ? "/warm" : "/cold") + "/seed" +
            std::to_string(seed);
  s.world = world_preset(preset);
  s.world.seed = seed;
  s.reward = defaults.reward;
  s.reward.variant = variant;
  s.reward.c = s.world.max_searches;
  s.warmstart_enabled = warm;
  s.warmstart = defaults.warmstart;
  s.warmstart.seed = seed;
  s.train = defaults.train;
  s.train.seed = seed;
  s.train.steps = steps;
  return s;
}

struct Evaluated {
  SearchModeReport search;
  AbstentionReport abstain;
  std::vector<double> first_search_by_type;
};

Evaluated evaluate(const PolicyTable& policy, const WorldConfig& world) {
  const EvalConfig ec;
  const auto questions = sample_questions(world, kTestSplit, ec.num_questions);
  Evaluated e;
  e.search = eval_search_mode(policy, world, questions, ec.samples_per_question, kEvalSeed);
  Rng prof_rng = make_stream(kEvalSeed, {1});
  const auto profile =
      answerability_profile(world, questions, ec.k_samples, prof_rng, ec.answerable_threshold);
  e.abstain = eval_abstention_mode(policy, world, questions, profile, ec.samples_per_question, kEvalSeed);

  std::vector<int> total(static_cast<std::size_t>(world.num_types()), 0);
  std::vector<int> searched(total.size(), 0);
  for (const auto& q : questions) {
    for (int k = 0; k < ec.samples_per_question; ++k) {
      Rng rng = make_stream(kEvalSeed, {2, fnv1a64(q.question_id), static_cast<std::uint64_t>(k)});
      const Rollout r = sample_trajectory(policy, q, world, rng);
      ++total[static_cast<std::size_t>(q.type_id)];
      searched[static_cast<std::size_t>(q.type_id)] +=
          !r.decisions.empty() && r.decisions.front().action == Action::Search;
    }
  }
  for (std::size_t t = 0; t < total.size(); ++t) {
    e.first_search_by_type.push_back(total[t] > 0 ? double(searched[t]) / total[t] : 0.0);
  }
  return e;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  struct Case {
    const char* name;
    double got, want;
  };
  const Case cases[] = {
      {"otc(0,0,5)", r_help_otc(0, 0, 5), 1.0},
      {"otc(5,0,5)", r_help_otc(5, 0, 5), 0.5},
      {"otc(2,2,5)", r_help_otc(2, 2, 5), 1.0},
      {"otc(2,1,5)", r_help_otc(2, 1, 5), std::sin(2.0 * M_PI / 3.0)},
      {"exp(3,1,.5)", r_help_exp(3, 1, 0.5), 0.25},
  };
  Outcome o{true, ""};
  double worst = 0.0;
  for (const auto& c : cases) {
    const double err = std::abs(c.got - c.want);
    worst = std::max(worst, err);
    if (err > kRewardTol) {
      o.pass = false;
      o.detail += std::string(c.name) + " off; ";
    }
  }
  for (int m = 1; m <= 10; ++m) {
    for (const int c : {1, 5, 10}) {
      if (std::abs(r_help_otc_strict(m, 0, c)) > kRewardTol) {
        o.pass = false;
        o.detail += "otc-strict(" + std::to_string(m) + ",0," + std::to_string(c) + ") != 0; ";
      }
    }
  }
  o.detail += "max error " + fmt("%.3g", worst);
  return o;
}

Outcome ac2() {
  std::vector<OutcomeRecord> records;
  for (int i = 0; i < 10000; ++i) records.push_back({i < 5891 ? 1 : 0, 1});
  const double tp = tool_productivity(records);
  const bool ok = std::abs(tp - 0.29455) <= kTpTol;
  return {ok, "TP " + fmt("%.8f", tp)};
}

Outcome ac3() {
  Rng rng(3);
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(std::log(0.01), std::log(100.0));
  std::bernoulli_distribution zero(0.3);
  double worst_mean = 0.0, worst_scale = 0.0;
  for (int g = 0; g < kFuzzGroups; ++g) {
    Eigen::VectorXd r(kGroupSize);
    for (auto& x : r) x = zero(rng) ? 0.0 : reward(rng);
    for (const bool norm : {true, false}) {
      worst_mean = std::max(worst_mean, std::abs(group_advantages(r, norm).mean()));
    }
    const Eigen::VectorXd a = group_advantages(r, true);
    const Eigen::VectorXd scaled = group_advantages((std::exp(log_scale(rng)) * r).eval(), true);
    worst_scale = std::max(worst_scale, (a - scaled).cwiseAbs().maxCoeff());
  }
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(kGroupSize, 0.37);
  const bool degenerate = group_advantages(flat, true).isZero(0.0) && group_advantages(flat, false).isZero(0.0);
  const bool ok = worst_mean <= kAdvantageTol && worst_scale <= kAdvantageTol && degenerate;
  return {ok, "max |mean| " + fmt("%.3g", worst_mean) + ", max rescale drift " + fmt("%.3g", worst_scale) +
                  ", all-equal group " + (degenerate ? "zero" : "NONZERO") +
                  " (the 1e-8 std offset is not scale-free)"};
}

Outcome ac4() {
  const RunSummary run = execute_run(spec_for("default", RewardVariant::OtcStrict, true, 1, 200));
  const WorldConfig& w = run.spec.world;
  const Evaluated e = evaluate(run.result.best_policy, w);
  bool ok = true;
  std::string detail;
  for (int t = 0; t < w.num_types(); ++t) {
    const auto& type = w.types[static_cast<std::size_t>(t)];
    const double rate = e.first_search_by_type[static_cast<std::size_t>(t)];
    const bool unknown = type.name.starts_with("UNKNOWN");
    ok = ok && (unknown ? rate >= kUnknownSearchMin : rate <= kKnownSearchMax);
    detail += type.name + " " + fmt("%.3f", rate) + ", ";
  }
  const double delta = e.abstain.delta.value_or(-1e9);
  const double abs0 = e.abstain.abs0_pct.value_or(-1e9);
  ok = ok && delta >= kDeltaMin && abs0 >= kAbs0Min;
  detail += "Delta " + fmt("%.1f", delta) + ", Abs(0) " + fmt("%.1f", abs0) + ", TP " +
            fmt("%.2f", 100.0 * e.search.tool_productivity);
  return {ok, detail};
}

Outcome ac5() {
  std::vector<RunSpec> specs;
  for (const auto v : {RewardVariant::Otc, RewardVariant::Exp, RewardVariant::OtcStrict}) {
    for (const auto seed : kSeeds) specs.push_back(spec_for("oracle", v, true, seed, kCollapseWithin));
  }
  bool ok = true;
  std::string detail;
  for (const auto& run : execute_runs(specs)) {
    const auto step = first_step_with_help_rate(run.result, kCollapseHelpRate);
    ok = ok && step.has_value() && *step <= kCollapseWithin;
    detail += run.label + "@" + (step ? std::to_string(*step) : std::string("never")) + " ";
  }
  return {ok, detail};
}

Outcome ac6() {
  std::vector<RunSpec> specs;
  for (const bool warm : {false, true}) {
    for (const auto seed : kSeeds) specs.push_back(spec_for("twohop", RewardVariant::OtcStrict, warm, seed, 200));
  }
  const auto runs = execute_runs(specs);
  int cold_collapsed = 0, warm_collapsed = 0;
  double worst_warm_tp = 1e9, best_collapsed_tp = -1e9;
  std::string detail;
  for (const auto& run : runs) {
    const bool collapsed = degenerate_bucket(run.final_search, kDegenerateBucket).has_value();
    const double tp = run.final_search.tool_productivity;
    if (collapsed) best_collapsed_tp = std::max(best_collapsed_tp, tp);
    if (run.spec.warmstart_enabled) {
      warm_collapsed += collapsed;
      worst_warm_tp = std::min(worst_warm_tp, tp);
    } else {
      cold_collapsed += collapsed;
    }
    detail += run.label + (collapsed ? " collapsed" : " ok") + " TP " + fmt("%.3f", tp) + "; ";
  }
  const bool ok = cold_collapsed >= kMinColdCollapses && warm_collapsed == 0 &&
                  (cold_collapsed == 0 || worst_warm_tp > best_collapsed_tp);
  return {ok, "cold collapses " + std::to_string(cold_collapsed) + "/3, warm collapses " +
                  std::to_string(warm_collapsed) + "/3; " + detail};
}

Outcome ac7() {
  WorldConfig w = world_preset("default");
  w.seed = 1;
  WarmStartConfig wc;
  wc.seed = 1;
  wc.num_questions = kCorpusQuestions;
  const auto corpus = generate_corpus(w, wc);
  std::vector<int> hist(static_cast<std::size_t>(wc.l_max + 1), 0);
  for (const auto& row : corpus) ++hist[static_cast<std::size_t>(row.l_target)];
  bool ok = true;
  std::string detail = "l shares";
  for (const int h : hist) {
    const double share = double(h) / kCorpusQuestions;
    ok = ok && std::abs(share - 1.0 / hist.size()) <= kUniformTol;
    detail += " " + fmt("%.3f", share);
  }
  const PolicyTable cloned = behavior_clone(corpus, w);
  const Evaluated e = evaluate(cloned, w);
  detail += "; m buckets";
  for (const auto& b : e.search.buckets) {
    ok = ok && b.fraction >= kMinBucket;
    detail += " " + fmt("%.3f", b.fraction);
  }
  const double delta = e.abstain.delta.value_or(1e9);
  ok = ok && std::abs(delta) <= kClonedDeltaMax;
  detail += "; Delta " + fmt("%.1f", delta);
  return {ok, detail};
}

class EchoHelper : public Helper {
 public:
  std::vector<std::string> respond(std::string_view) override { return {"doc"}; }
};

Outcome ac8() {
  Rng rng(8);
  int round_trip_failures = 0;
  for (int i = 0; i < kRoundTrips; ++i) {
    const Trajectory t = helpseek::testing::random_trajectory(rng);
    const auto grammar = i % 2 == 0 ? TagGrammar::standard() : TagGrammar::oracle();
    Trajectory back = parse(serialize(t, grammar), grammar);
    back.question_id = t.question_id;
    round_trip_failures += !(back == t);
  }

  Trajectory warned;
  warned.steps = {Search{"q"}, Warning{std::string(kSearchLimitMessage)}};
  warned.truncated = true;
  const std::string text = serialize(warned);
  const bool golden = text.ends_with("<warning> SEARCH LIMIT REACHED </warning>");

  int over_budget = 0, runs = 0;
  for (int L = 0; L <= 6; ++L) {
    for (const double p : {0.3, 0.7, 0.95, 1.0}) {
      for (int trial = 0; trial < 100; ++trial) {
        InferenceConfig cfg;
        cfg.max_searches = L;
        cfg.oracle_mode = trial % 2 == 1;
        const auto tags = TagGrammar::for_mode(cfg.oracle_mode);
        Generator gen = [&](const Trajectory&, Helper&) {
          const bool search = std::bernoulli_distribution(p)(rng);
          return GeneratedAction{search ? "<" + std::string(tags.search) + ">s</" + std::string(tags.search) + ">"
                                        : std::string("<answer>a</answer>"),
                                 false};
        };
        EchoHelper helper;
        const auto r = run_inference("q", gen, helper, cfg);
        over_budget += r.trajectory.search_count() > L || r.actions > cfg.max_actions();
        ++runs;
      }
    }
  }
  WorldConfig w = world_preset("default");
  PolicyTable always = PolicyTable::for_world(w);
  always.logits().col(1).setConstant(50.0);
  SampleOptions unmasked;
  unmasked.mask_search_at_budget = false;
  for (const auto& q : sample_questions(w, 9, 200)) {
    for (const auto& opts : {SampleOptions{}, unmasked}) {
      Rng r = make_stream(8, {fnv1a64(q.question_id)});
      over_budget += sample_trajectory(always, q, w, r, opts).searches() > w.max_searches;
      ++runs;
    }
  }
  const bool ok = round_trip_failures == 0 && golden && over_budget == 0;
  return {ok, std::to_string(kRoundTrips - round_trip_failures) + "/" + std::to_string(kRoundTrips) +
                  " round trips, warning " + (golden ? "exact" : "MISMATCH") + ", " +
                  std::to_string(over_budget) + "/" + std::to_string(runs) + " runs over budget"};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(entry.path(), dir).string()] = os.str();
  }
  return files;
}

Outcome ac9() {
  const fs::path dir = fs::temp_directory_path() / ("helpseek_acceptance_" + std::to_string(::getpid()));
  ExperimentConfig config;
  config.seed = 1;
  config.output_dir = dir;
  config.resolve();
  auto run_all = [&] {
    fs::remove_all(dir);
    std::ostringstream sink;
    cmd_warmstart(config, sink);
    cmd_train(config, std::nullopt, sink);
    cmd_eval(config, std::nullopt, EvalMode::Search, sink);
    cmd_eval(config, std::nullopt, EvalMode::Abstain, sink);
    return snapshot(dir);
  };
  const auto first = run_all();
  const auto second = run_all();
  fs::remove_all(dir);
  int differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    differing += it == second.end() || it->second != bytes;
  }
  const bool ok = differing == 0 && first.size() == second.size() && !first.empty();
  return {ok, std::to_string(first.size()) + " files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AC1 reward formulas", ac1},       {"AC2 tool productivity", ac2},
      {"AC3 advantage invariants", ac3},  {"AC4 selective help-seeking", ac4},
      {"AC5 oracle-helper collapse", ac5}, {"AC6 warm-start ablation", ac6},
      {"AC7 warm-start corpus", ac7},     {"AC8 protocol conformance", ac8},
      {"AC9 determinism", ac9},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt("%.1f", secs) << " s): " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
