#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpseek/core.hpp"
#include "helpseek/eval.hpp"
#include "helpseek/policy.hpp"
#include "helpseek/world.hpp"

namespace helpseek {

struct TrainConfig {
  int group_size = 16;
  int batch_questions = 64;
  double learning_rate = 0.05;
  double clip_epsilon = 0.2;
  double entropy_coeff = 1e-3;
  double beta_kl = 0.0;
  double grad_clip_norm = 1.0;
  int steps = 200;
  int eval_every = 25;
  bool std_normalize = true;
  std::uint64_t seed = 0;
  int validation_questions = 256;
  int validation_samples = 4;

  void check() const;
};

inline constexpr double kAdvantageStabilizer = 1e-8;

/// Group-relative advantages: r - mean, divided by (population std + 1e-8)
/// when `std_normalize`. A constant group maps to all zeros.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> group_advantages(
    const Eigen::MatrixBase<Derived>& rewards, bool std_normalize) {
  using Scalar = typename Derived::Scalar;
  if (rewards.size() < 2) throw std::invalid_argument("group_advantages: group size must be >= 2");
  const Scalar mean = rewards.mean();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> centered = (rewards.array() - mean).matrix();
  if (!std_normalize) return centered;
  const Scalar sd = std::sqrt(centered.squaredNorm() / Scalar(rewards.size()));
  if (sd == Scalar(0)) return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(rewards.size());
  return centered / (sd + Scalar(kAdvantageStabilizer));
}

std::vector<double> compute_advantages(std::span<const double> rewards, bool std_normalize);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A) and its derivative in
/// the ratio (zero on the clipped branch).
struct SurrogateTerm {
  double value = 0.0;
  double d_ratio = 0.0;
  bool clipped = false;
};
SurrogateTerm clipped_surrogate(double ratio, double advantage, double epsilon);

struct GroupSample {
  QuestionSpec question;
  std::vector<Rollout> rollouts;
  GroupRewards rewards;
  Eigen::VectorXd advantages;
};

struct GroupBatch {
  std::vector<GroupSample> groups;
};

/// Rewards each rollout with total_reward and fills the advantages.
void score_and_normalize(GroupSample& group, const RewardConfig& reward, bool std_normalize);

/// Rolls out G trajectories for each of `batch_questions` fresh questions.
/// Every rollout draws from its own stream keyed by (seed, step, question,
/// rollout).
GroupBatch collect_batch(const PolicyTable& policy, const WorldConfig& world,
                         const RewardConfig& reward, const TrainConfig& config, int step);

struct StepDiagnostics {
  int step = 0;
  double mean_reward = 0.0;
  double mean_tc = 0.0;
  double accuracy = 0.0;
  double entropy = 0.0;
  std::optional<double> kl;  ///< only computed when beta_kl > 0
  double grad_norm = 0.0;
  double help_rate = 0.0;    ///< fraction of trajectories with at least one search
};

struct AdamState {
  PolicyTable::Logits m;
  PolicyTable::Logits v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  [[nodiscard]] const std::string& dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

/// Gradient of the clipped surrogate + entropy bonus - beta * KL, averaged
/// over policy-chosen decisions. Forced decisions and environment steps
/// contribute nothing. `reference` is only read when beta_kl > 0.
PolicyTable::Logits surrogate_gradient(const PolicyTable& policy, const PolicyTable* reference,
                                       const GroupBatch& batch, const TrainConfig& config,
                                       StepDiagnostics* diagnostics = nullptr);

/// One ascent step: gradient, L2-norm clipping, Adam update. Throws
/// TrainingAborted on a non-finite gradient.
StepDiagnostics policy_gradient_step(PolicyTable& policy, const PolicyTable* reference,
                                     const GroupBatch& batch, const TrainConfig& config,
                                     AdamState& adam);

struct TrainLogEntry {
  StepDiagnostics diagnostics;
  std::optional<double> val_tp;
  std::optional<double> val_accuracy;
  std::optional<double> val_tc;
};

struct TrainResult {
  PolicyTable final_policy;
  PolicyTable best_policy;
  int best_step = 0;
  double best_val_tp = 0.0;
  std::vector<TrainLogEntry> log;
};

struct TrainHooks {
  std::function<void(const TrainLogEntry&)> on_log;
  std::function<void(int step, const PolicyTable&, const SearchModeReport&)> on_checkpoint;
};

/// Validation questions are drawn from the world seed; the split id keeps
/// them apart from test sets.
inline constexpr std::uint64_t kValidationSplit = 1;
inline constexpr std::uint64_t kTestSplit = 2;

/// Seed of the validation rollouts made during training.
std::uint64_t validation_seed(const TrainConfig& config);

/// rollout -> reward -> advantage -> update, `steps` times. Validation TP is
/// measured at step 0, every eval_every steps and at the end; the returned
/// best_policy is the checkpoint with the highest validation TP (earliest
/// on ties).
TrainResult train(const WorldConfig& world, const PolicyTable& policy_init,
                  const RewardConfig& reward, const TrainConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace helpseek
