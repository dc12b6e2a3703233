#include "helpseek/warmstart.hpp"

#include <stdexcept>

#include "helpseek/protocol.hpp"

namespace helpseek {
namespace {

constexpr std::uint64_t kCorpusQuestions = 0x5153ULL;
constexpr std::uint64_t kCorpusRollouts = 0x5752ULL;

}  // namespace

void WarmStartConfig::check(const WorldConfig& world) const {
  if (l_max < 0 || l_max > world.max_searches) {
    throw ConfigError("warm-start l_max must lie in [0, L]");
  }
  if (num_samples < 1) throw ConfigError("warm-start num_samples must be >= 1");
  if (num_questions < 1) throw ConfigError("warm-start num_questions must be >= 1");
}

Candidate build_trajectory(const QuestionSpec& question, const WorldConfig& world, int l_target,
                           const WarmStartConfig& config, Rng& rng) {
  if (l_target < 0 || l_target > config.l_max) {
    throw std::invalid_argument("build_trajectory: l_target outside [0, l_max]");
  }
  Candidate c;
  c.trajectory.question_id = question.question_id;
  EnvState state;
  EpisodeHelper helper(world, question, state, rng);
  for (int i = 0; i < l_target; ++i) {
    const std::string query = world.oracle_mode
                                  ? std::string("I need help")
                                  : question.question_id + " hop " +
                                        std::to_string(state.resolved_hops + 1);
    c.trajectory.steps.emplace_back(Think{std::string(kThinkPlaceholder)});
    c.trajectory.steps.emplace_back(Search{query});
    c.trajectory.steps.emplace_back(Documents{helper.respond(query)});
  }
  c.trajectory.steps.emplace_back(Think{std::string(kThinkPlaceholder)});
  const bool ok = answer_outcome(state, question, world, rng) == 1;
  c.trajectory.steps.emplace_back(Answer{ok ? question.gold_answer : wrong_answer(question, rng)});
  c.correct = r_acc(*c.trajectory.answer(), question.gold_answer);
  return c;
}

Candidate select_trajectory(std::span<const Candidate> candidates, std::string_view gold, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("select_trajectory: no candidates");
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].correct == 1) correct.push_back(i);
  }
  if (!correct.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, correct.size() - 1);
    Candidate chosen = candidates[correct[pick(rng)]];
    std::get<Answer>(chosen.trajectory.steps.back()).text = std::string(gold);
    return chosen;
  }
  std::size_t best = 0;
  auto length = [&](std::size_t i) {
    const auto* a = candidates[i].trajectory.answer();
    return a != nullptr ? a->size() : std::string::npos;
  };
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (length(i) < length(best)) best = i;
  }
  return candidates[best];
}

std::vector<CorpusRow> generate_corpus(const WorldConfig& world, const WarmStartConfig& config) {
  world.check();
  config.check(world);
  const auto grammar = TagGrammar::for_mode(world.oracle_mode);
  Rng qrng = make_stream(config.seed, {kCorpusQuestions});
  std::vector<CorpusRow> rows;
  rows.reserve(static_cast<std::size_t>(config.num_questions));
  for (int qi = 0; qi < config.num_questions; ++qi) {
    const QuestionSpec q = sample_question(world, qrng);
    Rng rng = make_stream(config.seed, {kCorpusRollouts, static_cast<std::uint64_t>(qi)});
    const int l = std::uniform_int_distribution<int>(0, config.l_max)(rng);
    std::vector<Candidate> candidates;
    candidates.reserve(static_cast<std::size_t>(config.num_samples));
    for (int i = 0; i < config.num_samples; ++i) {
      candidates.push_back(build_trajectory(q, world, l, config, rng));
    }
    const Candidate chosen = select_trajectory(candidates, q.gold_answer, rng);
    rows.push_back({q.question_id, q.type_id, l, serialize(chosen.trajectory, grammar),
                    chosen.correct == 1});
  }
  return rows;
}

PolicyTable behavior_clone(std::span<const CorpusRow> corpus, const WorldConfig& world) {
  if (corpus.empty()) throw std::invalid_argument("behavior_clone: empty corpus");
  PolicyTable policy = PolicyTable::for_world(world);
  PolicyTable::Logits counts = PolicyTable::Logits::Zero(policy.num_states(), kNumActions);
  const auto grammar = TagGrammar::for_mode(world.oracle_mode);

  for (const auto& row : corpus) {
    if (row.type_id < 0 || row.type_id >= world.num_types()) {
      throw std::invalid_argument("corpus row " + row.question_id + ": type_id outside the world");
    }
    const int hops = world.types[static_cast<std::size_t>(row.type_id)].hops;
    const Trajectory t = parse(row.text, grammar);
    int searches = 0;
    int resolved = 0;
    for (const auto& step : t.steps) {
      if (std::holds_alternative<Search>(step)) {
        const auto s = policy.state_index({row.type_id, searches, resolved});
        counts(s, static_cast<int>(Action::Search)) += 1.0;
      } else if (const auto* docs = std::get_if<Documents>(&step)) {
        ++searches;
        if (world.oracle_mode) {
          resolved = hops;
        } else {
          for (const auto& d : docs->items) {
            if (std::string_view(d).starts_with(kFactMarker)) {
              resolved = std::min(resolved + 1, hops);
              break;
            }
          }
        }
      } else if (std::holds_alternative<Answer>(step)) {
        const auto s = policy.state_index({row.type_id, searches, resolved});
        counts(s, static_cast<int>(Action::Answer)) += 1.0;
      }
    }
  }
  policy.logits() = (counts.array() + 1.0).log().matrix();
  return policy;
}

}  // namespace helpseek
