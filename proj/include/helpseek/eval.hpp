#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "helpseek/policy.hpp"
#include "helpseek/world.hpp"

namespace helpseek {

struct OutcomeRecord {
  int correct = 0;
  int searches = 0;
};

/// Mean of correct / (1 + searches).
double tool_productivity(std::span<const OutcomeRecord> records);

/// Trajectories grouped by search count: 0, 1, and 2 or more.
struct SearchBucket {
  double fraction = 0.0;
  std::optional<double> accuracy;  ///< empty when the bucket has no records
};

struct SearchModeReport {
  double accuracy = 0.0;
  double mean_tool_calls = 0.0;
  double tool_productivity = 0.0;
  std::array<SearchBucket, 3> buckets{};
  int samples_per_question = 4;
  int num_records = 0;
};

SearchModeReport summarize_search_mode(std::span<const OutcomeRecord> records,
                                       int samples_per_question);

SearchModeReport eval_search_mode(const PolicyTable& policy, const WorldConfig& world,
                                  std::span<const QuestionSpec> questions,
                                  int samples_per_question, std::uint64_t seed);

/// Index of the largest bucket when it holds at least `threshold` of all
/// trajectories, i.e. the search behaviour has collapsed onto one count.
std::optional<int> degenerate_bucket(const SearchModeReport& report, double threshold = 0.95);

// ---------------------------------------------------------------------------

struct QuestionAnswerability {
  std::string question_id;
  int samples = 0;
  int correct = 0;
  double mean = 0.0;
  bool always_correct = false;
  bool always_incorrect = false;
  bool answerable = false;  ///< mean > threshold
};

struct AnswerabilityProfile {
  int k_samples = 10;
  double threshold = 0.1;
  std::vector<QuestionAnswerability> questions;
};

/// Draws k no-retrieval answer outcomes per question.
AnswerabilityProfile answerability_profile(const WorldConfig& world,
                                           std::span<const QuestionSpec> questions, int k_samples,
                                           Rng& rng, double threshold = 0.1);

struct AbstentionReport {
  double overall_accuracy = 0.0;
  std::optional<double> precision;  ///< empty when every record abstained
  double abstain_rate = 0.0;
  std::optional<double> abs0_pct;   ///< empty when no always-incorrect questions
  std::optional<double> abs1_pct;   ///< empty when no always-correct questions
  std::optional<double> delta;
  std::vector<std::optional<double>> abstain_rate_by_type;
  int samples_per_question = 4;
  int num_records = 0;
  int always_incorrect_questions = 0;
  int always_correct_questions = 0;
};

/// Search access removed: the first search request counts as an abstention
/// and ends the trajectory. Every sample is an independent record.
AbstentionReport eval_abstention_mode(const PolicyTable& policy, const WorldConfig& world,
                                      std::span<const QuestionSpec> questions,
                                      const AnswerabilityProfile& profile,
                                      int samples_per_question, std::uint64_t seed);

std::string search_buckets_csv(const SearchModeReport& report);

}  // namespace helpseek
