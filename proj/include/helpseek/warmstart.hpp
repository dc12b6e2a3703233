#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helpseek/policy.hpp"
#include "helpseek/world.hpp"

namespace helpseek {

struct WarmStartConfig {
  int l_max = 2;
  int num_samples = 5;  ///< N candidates per question
  int num_questions = 1000;
  std::uint64_t seed = 0;

  void check(const WorldConfig& world) const;
};

struct Candidate {
  Trajectory trajectory;
  int correct = 0;
};

/// Forced sequence [think, search] x l_target + [think, answer]; documents
/// come from the world's helper and the answer from its outcome model.
Candidate build_trajectory(const QuestionSpec& question, const WorldConfig& world, int l_target,
                           const WarmStartConfig& config, Rng& rng);

/// A uniformly random correct candidate if one exists (its answer replaced
/// by the gold text), otherwise the one with the shortest answer, lowest
/// index first.
Candidate select_trajectory(std::span<const Candidate> candidates, std::string_view gold, Rng& rng);

struct CorpusRow {
  std::string question_id;
  int type_id = 0;
  int l_target = 0;
  std::string text;
  bool correct = false;
};

std::vector<CorpusRow> generate_corpus(const WorldConfig& world, const WarmStartConfig& config);

/// Count-based cloning: logits are log(count + 1) of each action at each
/// state seen in the corpus, so unvisited states stay uniform.
PolicyTable behavior_clone(std::span<const CorpusRow> corpus, const WorldConfig& world);

}  // namespace helpseek
