#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "helpseek/core.hpp"

namespace helpseek {

/// Element names for each step kind. Oracle-helper runs rename the search
/// and document elements to help / helper_answer.
struct TagGrammar {
  std::string think = "think";
  std::string search = "search";
  std::string answer = "answer";
  std::string document = "document";
  std::string warning = "warning";

  static TagGrammar standard() { return {}; }
  static TagGrammar oracle() {
    TagGrammar g;
    g.search = "help";
    g.document = "helper_answer";
    return g;
  }
  static TagGrammar for_mode(bool oracle_mode) { return oracle_mode ? oracle() : standard(); }
};

/// Body of the warning step appended when a search exceeds the budget.
/// The surrounding spaces are part of the message.
inline constexpr std::string_view kSearchLimitMessage = " SEARCH LIMIT REACHED ";

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses tagged trajectory text. Whitespace between elements is ignored;
/// element bodies are kept verbatim. Text that stops inside an element, or
/// never reaches an answer, yields a trajectory flagged truncated.
Trajectory parse(std::string_view text, const TagGrammar& grammar = TagGrammar::standard());

/// Inverse of parse. Throws std::invalid_argument if the trajectory breaks a
/// step invariant or a body contains '<'.
std::string serialize(const Trajectory& trajectory,
                      const TagGrammar& grammar = TagGrammar::standard());

// ---------------------------------------------------------------------------
// Multi-turn inference

/// External resource answering search / help requests. Implementations
/// state their own thread-safety; run_inference calls it from one thread.
class Helper {
 public:
  virtual ~Helper() = default;
  virtual std::vector<std::string> respond(std::string_view request) = 0;
};

/// One generated action: text up to the first </search>, </answer>, or the
/// end of sequence.
struct GeneratedAction {
  std::string text;
  bool end_of_sequence = false;
};

using Generator =
    std::function<GeneratedAction(const Trajectory& partial, Helper& helper)>;

struct InferenceConfig {
  int max_searches = 5;  ///< L
  bool oracle_mode = false;
  /// When false, the first search request ends the trajectory (abstention).
  bool search_enabled = true;

  [[nodiscard]] int max_actions() const { return max_searches + 2; }
  void check() const;
};

struct InferenceResult {
  Trajectory trajectory;
  int actions = 0;
  bool abstained = false;  ///< search requested while search was disabled
  bool malformed = false;  ///< an action had no complete search/answer element
};

InferenceResult run_inference(std::string question_id, const Generator& generator,
                              Helper& helper, const InferenceConfig& config);

}  // namespace helpseek
