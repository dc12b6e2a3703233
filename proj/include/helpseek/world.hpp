#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "helpseek/protocol.hpp"
#include "helpseek/rng.hpp"

namespace helpseek {

/// A population of questions sharing hop count and parametric answerability.
struct QuestionType {
  std::string name;
  int hops = 1;           ///< facts that must be retrieved to answer via search
  double p_param = 0.0;   ///< chance a no-retrieval answer is correct
  double weight = 1.0;    ///< mixture weight
};

struct WorldConfig {
  std::vector<QuestionType> types;
  double rho = 0.85;      ///< chance one search resolves one hop
  int max_searches = 5;   ///< L
  int docs_per_search = 3;
  bool oracle_mode = false;
  std::uint64_t seed = 0;

  void check() const;
  [[nodiscard]] int max_hops() const;
  [[nodiscard]] int num_types() const { return static_cast<int>(types.size()); }
};

/// Built-in presets: "default", "oracle", "singlehop", "twohop".
WorldConfig world_preset(std::string_view name);
std::vector<std::string> world_preset_names();

struct QuestionSpec {
  std::string question_id;
  int type_id = 0;
  std::string gold_answer;
};

std::string gold_answer_for(std::string_view question_id);

QuestionSpec sample_question(const WorldConfig& config, Rng& rng);

/// Draws `count` questions from a stream dedicated to (config.seed, split).
std::vector<QuestionSpec> sample_questions(const WorldConfig& config, std::uint64_t split,
                                           int count);

struct EnvState {
  int searches = 0;
  int resolved_hops = 0;
};

struct Observation {
  int type_id = 0;
  int searches = 0;
  int resolved_hops = 0;
};

Observation observe(const EnvState& state, const QuestionSpec& question, const WorldConfig& config);

/// Marker prefix of a document carrying a resolving fact.
inline constexpr std::string_view kFactMarker = "[fact]";

/// Retriever helper. Each call resolves one more hop with probability rho;
/// otherwise the documents are deterministic filler keyed by
/// (question_id, search index). Throws std::logic_error past the budget.
std::vector<std::string> helper_search(EnvState& state, const QuestionSpec& question,
                                       std::string_view query, const WorldConfig& config,
                                       Rng& rng);

/// Oracle helper: returns the gold answer verbatim.
std::string helper_oracle(std::string_view query, const QuestionSpec& question);

/// Oracle variant of helper_search's state update: one call resolves
/// every hop.
std::vector<std::string> helper_oracle_call(EnvState& state, const QuestionSpec& question,
                                            std::string_view query, const WorldConfig& config);

/// Correctness of an answer given now: certain once every hop is
/// resolved, otherwise a p_param coin flip.
int answer_outcome(const EnvState& state, const QuestionSpec& question, const WorldConfig& config,
                   Rng& rng);

/// A non-gold answer string of random length.
std::string wrong_answer(const QuestionSpec& question, Rng& rng);

/// Helper bound to one episode; mutates that episode's EnvState.
class EpisodeHelper : public Helper {
 public:
  EpisodeHelper(const WorldConfig& config, const QuestionSpec& question, EnvState& state, Rng& rng)
      : config_(config), question_(question), state_(state), rng_(rng) {}

  std::vector<std::string> respond(std::string_view request) override;

 private:
  const WorldConfig& config_;
  const QuestionSpec& question_;
  EnvState& state_;
  Rng& rng_;
};

}  // namespace helpseek
