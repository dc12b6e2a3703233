#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace helpseek {

/// Raised when a configuration value falls outside its documented domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Trajectory steps

struct Think {
  std::string text;
  bool operator==(const Think&) const = default;
};

struct Search {
  std::string query;
  bool operator==(const Search&) const = default;
};

/// Helper output. Emitted by the environment, never by the policy, so it is
/// excluded from the policy-gradient loss.
struct Documents {
  std::vector<std::string> items;
  bool operator==(const Documents&) const = default;
};

struct Warning {
  std::string text;
  bool operator==(const Warning&) const = default;
};

struct Answer {
  std::string text;
  bool operator==(const Answer&) const = default;
};

using Step = std::variant<Think, Search, Documents, Warning, Answer>;

inline bool is_environment_emitted(const Step& step) {
  return std::holds_alternative<Documents>(step) ||
         std::holds_alternative<Warning>(step);
}

struct Trajectory {
  std::string question_id;
  std::vector<Step> steps;
  bool truncated = false;

  bool operator==(const Trajectory&) const = default;

  /// SEARCH steps the helper served. Searches answered by a warning, or
  /// left unserved because search was disabled, do not count.
  [[nodiscard]] int search_count() const;
  [[nodiscard]] int warning_count() const;
  /// Final answer text, or nullptr when the trajectory has no ANSWER step.
  [[nodiscard]] const std::string* answer() const;
};

/// Throws std::invalid_argument naming the first violated step invariant.
void validate(const Trajectory& trajectory);

// ---------------------------------------------------------------------------
// Rewards

enum class RewardVariant { Exp, Otc, OtcStrict };

std::string_view to_string(RewardVariant variant);
RewardVariant parse_reward_variant(std::string_view name);

struct RewardConfig {
  RewardVariant variant = RewardVariant::OtcStrict;
  double lambda_decay = 0.8;
  int c = 5;

  void check() const;
};

/// Lowercase, trim, collapse internal whitespace runs to one space.
std::string normalize_answer(std::string_view text);

/// Exact match after normalization. An empty (post-trim) answer scores 0.
int r_acc(std::string_view answer, std::string_view gold);

struct GroupEntry {
  int correct = 0;  ///< r_acc in {0, 1}
  int searches = 0; ///< m
};

/// Search count of the cheapest correct entry; 0 when none is correct.
int n_eff(std::span<const GroupEntry> group);

double r_help_exp(int m, int n, double lambda_decay);
double r_help_otc(int m, int n, int c);
double r_help_otc_strict(int m, int n, int c);
double r_help(const RewardConfig& config, int m, int n);

inline double total_reward(int correct, double help) { return correct * help; }

struct ScoredEntry {
  int correct = 0;
  int searches = 0;
  double help = 0.0;
  double total = 0.0;
};

struct GroupRewards {
  std::vector<ScoredEntry> entries;
  int n_eff = 0;
};

/// Scores a GRPO group. The efficiency baseline includes the scored
/// trajectory itself.
GroupRewards score_group(std::span<const GroupEntry> group,
                         const RewardConfig& config);

}  // namespace helpseek
