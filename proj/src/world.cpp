#include "helpseek/world.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "helpseek/core.hpp"

namespace helpseek {

void WorldConfig::check() const {
  if (types.empty()) throw ConfigError("world has no question types");
  double total_weight = 0.0;
  for (const auto& t : types) {
    if (t.hops < 1) throw ConfigError("question type '" + t.name + "': hops must be >= 1");
    if (!(t.p_param >= 0.0 && t.p_param <= 1.0)) {
      throw ConfigError("question type '" + t.name + "': p_param must lie in [0, 1]");
    }
    if (!(t.weight >= 0.0)) throw ConfigError("question type '" + t.name + "': negative weight");
    total_weight += t.weight;
  }
  if (!(total_weight > 0.0)) throw ConfigError("question type weights sum to zero");
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (max_searches < 0) throw ConfigError("search budget L must be non-negative");
  if (docs_per_search < 1) throw ConfigError("docs_per_search must be >= 1");
}

int WorldConfig::max_hops() const {
  int k = 1;
  for (const auto& t : types) k = std::max(k, t.hops);
  return k;
}

WorldConfig world_preset(std::string_view name) {
  WorldConfig w;
  if (name == "default") {
    w.types = {{"KNOWN-1HOP", 1, 0.9, 1.0},
               {"UNKNOWN-1HOP", 1, 0.05, 1.0},
               {"KNOWN-2HOP", 2, 0.8, 1.0},
               {"UNKNOWN-2HOP", 2, 0.0, 1.0}};
  } else if (name == "oracle") {
    w.types = {{"WEAK-1HOP", 1, 0.1, 1.0},
               {"UNKNOWN-1HOP", 1, 0.05, 1.0},
               {"WEAK-2HOP", 2, 0.1, 1.0},
               {"UNKNOWN-2HOP", 2, 0.0, 1.0}};
    w.oracle_mode = true;
  } else if (name == "singlehop") {
    w.types = {{"KNOWN-1HOP", 1, 0.9, 1.0},
               {"PARTIAL-1HOP", 1, 0.5, 1.0},
               {"UNKNOWN-1HOP", 1, 0.05, 1.0}};
  } else if (name == "twohop") {
    w.types = {{"KNOWN-1HOP", 1, 0.9, 1.0}, {"WEAK-2HOP", 2, 0.14, 3.0}};
  } else {
    throw ConfigError("unknown world preset '" + std::string(name) + "'");
  }
  return w;
}

std::vector<std::string> world_preset_names() { return {"default", "oracle", "singlehop", "twohop"}; }

std::string gold_answer_for(std::string_view question_id) {
  std::uint64_t h = fnv1a64(question_id);
  const int length = 4 + static_cast<int>(h % 7);
  std::string out;
  for (int i = 0; i < length; ++i) {
    h = splitmix64(h);
    out.push_back(static_cast<char>('a' + h % 26));
  }
  return out;
}

QuestionSpec sample_question(const WorldConfig& config, Rng& rng) {
  if (config.types.empty()) throw ConfigError("world has no question types");
  std::vector<double> weights;
  weights.reserve(config.types.size());
  for (const auto& t : config.types) weights.push_back(t.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());

  QuestionSpec q;
  q.type_id = pick(rng);
  char buf[24];
  std::snprintf(buf, sizeof buf, "q%016llx", static_cast<unsigned long long>(rng()));
  q.question_id = buf;
  q.gold_answer = gold_answer_for(q.question_id);
  return q;
}

std::vector<QuestionSpec> sample_questions(const WorldConfig& config, std::uint64_t split,
                                           int count) {
  Rng rng = make_stream(config.seed, {split});
  std::vector<QuestionSpec> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.push_back(sample_question(config, rng));
  return out;
}

Observation observe(const EnvState& state, const QuestionSpec& question, const WorldConfig& config) {
  const int k = config.types.at(static_cast<std::size_t>(question.type_id)).hops;
  return {question.type_id, state.searches, std::min(state.resolved_hops, k)};
}

std::vector<std::string> helper_search(EnvState& state, const QuestionSpec& question,
                                       std::string_view /*query*/, const WorldConfig& config,
                                       Rng& rng) {
  if (state.searches >= config.max_searches) {
    throw std::logic_error("helper_search: search budget exhausted");
  }
  const int k = config.types.at(static_cast<std::size_t>(question.type_id)).hops;
  const int s = state.searches;
  const bool hit = bernoulli(rng, config.rho);
  ++state.searches;

  std::vector<std::string> docs;
  docs.reserve(static_cast<std::size_t>(config.docs_per_search));
  if (hit) {
    state.resolved_hops = std::min(state.resolved_hops + 1, k);
    docs.push_back(std::string(kFactMarker) + " " + question.question_id + " hop " +
                   std::to_string(state.resolved_hops) + "/" + std::to_string(k));
  }
  for (int j = static_cast<int>(docs.size()); j < config.docs_per_search; ++j) {
    docs.push_back("passage " + question.question_id + "-" + std::to_string(s) + "-" +
                   std::to_string(j) + ": unrelated background text");
  }
  return docs;
}

std::string helper_oracle(std::string_view /*query*/, const QuestionSpec& question) {
  return question.gold_answer;
}

std::vector<std::string> helper_oracle_call(EnvState& state, const QuestionSpec& question,
                                            std::string_view query, const WorldConfig& config) {
  if (state.searches >= config.max_searches) {
    throw std::logic_error("helper_oracle_call: help budget exhausted");
  }
  ++state.searches;
  state.resolved_hops = config.types.at(static_cast<std::size_t>(question.type_id)).hops;
  return {helper_oracle(query, question)};
}

int answer_outcome(const EnvState& state, const QuestionSpec& question, const WorldConfig& config,
                   Rng& rng) {
  const auto& type = config.types.at(static_cast<std::size_t>(question.type_id));
  if (state.resolved_hops >= type.hops) return 1;
  return bernoulli(rng, type.p_param) ? 1 : 0;
}

std::string wrong_answer(const QuestionSpec& question, Rng& rng) {
  const auto gold = normalize_answer(question.gold_answer);
  while (true) {
    const int length = 3 + static_cast<int>(rng() % 10);
    std::string out;
    for (int i = 0; i < length; ++i) out.push_back(static_cast<char>('a' + rng() % 26));
    if (out != gold) return out;
  }
}

std::vector<std::string> EpisodeHelper::respond(std::string_view request) {
  if (config_.oracle_mode) return helper_oracle_call(state_, question_, request, config_);
  return helper_search(state_, question_, request, config_, rng_);
}

}  // namespace helpseek
