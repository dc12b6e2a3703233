#include "helpseek/grpo.hpp"

#include <algorithm>
#include <sstream>

namespace helpseek {
namespace {

constexpr std::uint64_t kQuestionStream = 0x7175657374ULL;
constexpr std::uint64_t kRolloutStream = 0x726f6c6cULL;
constexpr std::uint64_t kValidationStream = 0x76616cULL;

std::string dump_gradient(const PolicyTable& policy, const PolicyTable::Logits& grad, int step) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite gradient at step " << step << "\n";
  for (Eigen::Index s = 0; s < grad.rows(); ++s) {
    if (grad.row(s).allFinite() && policy.logits().row(s).allFinite()) continue;
    const auto obs = policy.observation(s);
    os << "state " << s << " (type " << obs.type_id << ", searches " << obs.searches
       << ", resolved " << obs.resolved_hops << "): logits " << policy.logits().row(s)
       << " grad " << grad.row(s) << "\n";
  }
  return os.str();
}

}  // namespace

void TrainConfig::check() const {
  if (group_size < 2) throw ConfigError("group_size must be >= 2");
  if (batch_questions < 1) throw ConfigError("batch_questions must be >= 1");
  if (!(clip_epsilon > 0.0)) throw ConfigError("clip_epsilon must be > 0");
  if (!(learning_rate >= 0.0) || !(entropy_coeff >= 0.0) || !(beta_kl >= 0.0) ||
      !(grad_clip_norm >= 0.0)) {
    throw ConfigError("training coefficients must be >= 0");
  }
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (validation_questions < 1 || validation_samples < 1) {
    throw ConfigError("validation set must be non-empty");
  }
}

std::vector<double> compute_advantages(std::span<const double> rewards, bool std_normalize) {
  const Eigen::Map<const Eigen::VectorXd> r(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
  const Eigen::VectorXd a = group_advantages(r, std_normalize);
  return {a.data(), a.data() + a.size()};
}

SurrogateTerm clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped_ratio = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  const double unclipped = ratio * advantage;
  const double clipped = clipped_ratio * advantage;
  if (clipped < unclipped) return {clipped, 0.0, true};
  return {unclipped, advantage, false};
}

void score_and_normalize(GroupSample& group, const RewardConfig& reward, bool std_normalize) {
  std::vector<GroupEntry> entries;
  entries.reserve(group.rollouts.size());
  for (const auto& r : group.rollouts) entries.push_back({r.correct, r.searches()});
  group.rewards = score_group(entries, reward);
  Eigen::VectorXd totals(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    totals(static_cast<Eigen::Index>(i)) = group.rewards.entries[i].total;
  }
  group.advantages = group_advantages(totals, std_normalize);
}

GroupBatch collect_batch(const PolicyTable& policy, const WorldConfig& world,
                         const RewardConfig& reward, const TrainConfig& config, int step) {
  const auto ustep = static_cast<std::uint64_t>(step);
  Rng qrng = make_stream(config.seed, {kQuestionStream, ustep});
  GroupBatch batch;
  batch.groups.resize(static_cast<std::size_t>(config.batch_questions));
  for (auto& g : batch.groups) g.question = sample_question(world, qrng);

  for (std::size_t qi = 0; qi < batch.groups.size(); ++qi) {
    auto& g = batch.groups[qi];
    g.rollouts.reserve(static_cast<std::size_t>(config.group_size));
    for (int i = 0; i < config.group_size; ++i) {
      Rng rng = make_stream(config.seed, {kRolloutStream, ustep, qi, static_cast<std::uint64_t>(i)});
      g.rollouts.push_back(sample_trajectory(policy, g.question, world, rng));
    }
    score_and_normalize(g, reward, config.std_normalize);
  }
  return batch;
}

PolicyTable::Logits surrogate_gradient(const PolicyTable& policy, const PolicyTable* reference,
                                       const GroupBatch& batch, const TrainConfig& config,
                                       StepDiagnostics* diagnostics) {
  const bool use_kl = config.beta_kl > 0.0;
  if (use_kl && (reference == nullptr || !reference->same_shape(policy))) {
    throw std::invalid_argument("beta_kl > 0 requires a reference policy of the same shape");
  }
  PolicyTable::Logits grad = PolicyTable::Logits::Zero(policy.num_states(), kNumActions);

  std::size_t decisions = 0;
  for (const auto& g : batch.groups) {
    for (const auto& r : g.rollouts) {
      for (const auto& d : r.decisions) decisions += d.forced ? 0 : 1;
    }
  }

  double reward_sum = 0.0, tc_sum = 0.0, correct_sum = 0.0, help_sum = 0.0;
  double entropy_sum = 0.0, kl_sum = 0.0;
  std::size_t trajectories = 0;
  const double inv = decisions > 0 ? 1.0 / static_cast<double>(decisions) : 0.0;

  for (const auto& g : batch.groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      const auto& r = g.rollouts[i];
      const double adv = g.advantages(static_cast<Eigen::Index>(i));
      ++trajectories;
      reward_sum += g.rewards.entries[i].total;
      tc_sum += r.searches();
      correct_sum += r.correct;
      help_sum += r.searches() > 0 ? 1.0 : 0.0;

      for (const auto& d : r.decisions) {
        if (d.forced) continue;
        const auto row = policy.logits().row(d.state);
        const auto p = softmax(row);
        const auto logp = log_softmax(row);
        const int a = static_cast<int>(d.action);
        const double ratio = std::exp(logp(a) - d.log_prob);
        const SurrogateTerm term = clipped_surrogate(ratio, adv, config.clip_epsilon);
        // d ratio / d z = ratio * (onehot(a) - p)
        Eigen::RowVector2d score = -p;
        score(a) += 1.0;
        grad.row(d.state) += (term.d_ratio * ratio * inv) * score;

        entropy_sum += entropy_of(row);
        if (config.entropy_coeff > 0.0) {
          grad.row(d.state) += (config.entropy_coeff * inv) * entropy_gradient(row);
        }
        if (use_kl) {
          const auto ref = reference->logits().row(d.state);
          kl_sum += kl_divergence(row, ref);
          grad.row(d.state) -= (config.beta_kl * inv) * kl_gradient(row, ref);
        }
      }
    }
  }

  if (diagnostics != nullptr && trajectories > 0) {
    const auto n = static_cast<double>(trajectories);
    diagnostics->mean_reward = reward_sum / n;
    diagnostics->mean_tc = tc_sum / n;
    diagnostics->accuracy = correct_sum / n;
    diagnostics->help_rate = help_sum / n;
    diagnostics->entropy = entropy_sum * inv;
    if (use_kl) diagnostics->kl = kl_sum * inv;
  }
  return grad;
}

StepDiagnostics policy_gradient_step(PolicyTable& policy, const PolicyTable* reference,
                                     const GroupBatch& batch, const TrainConfig& config,
                                     AdamState& adam) {
  StepDiagnostics diag;
  PolicyTable::Logits grad = surrogate_gradient(policy, reference, batch, config, &diag);
  diag.grad_norm = grad.norm();
  if (!std::isfinite(diag.grad_norm)) {
    throw TrainingAborted("non-finite policy gradient", dump_gradient(policy, grad, diag.step));
  }
  if (config.grad_clip_norm > 0.0 && diag.grad_norm > config.grad_clip_norm) {
    grad *= config.grad_clip_norm / diag.grad_norm;
  }

  if (adam.m.rows() != grad.rows()) {
    adam.m = PolicyTable::Logits::Zero(grad.rows(), kNumActions);
    adam.v = PolicyTable::Logits::Zero(grad.rows(), kNumActions);
    adam.t = 0;
  }
  ++adam.t;
  adam.m = adam.beta1 * adam.m + (1.0 - adam.beta1) * grad;
  adam.v = adam.beta2 * adam.v + (1.0 - adam.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.t));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.t));
  // Gradient ascent on the surrogate objective.
  policy.logits().array() +=
      config.learning_rate * (adam.m.array() / bc1) / ((adam.v.array() / bc2).sqrt() + adam.eps);

  if (!policy.logits().allFinite()) {
    throw TrainingAborted("non-finite logits after update", dump_gradient(policy, grad, diag.step));
  }
  return diag;
}

std::uint64_t validation_seed(const TrainConfig& config) {
  return splitmix64(config.seed ^ kValidationStream);
}

TrainResult train(const WorldConfig& world, const PolicyTable& policy_init,
                  const RewardConfig& reward, const TrainConfig& config, const TrainHooks& hooks) {
  world.check();
  reward.check();
  config.check();
  if (!policy_init.matches(world)) throw ConfigError("initial policy does not match the world");

  const auto validation = sample_questions(world, kValidationSplit, config.validation_questions);
  const std::uint64_t val_seed = validation_seed(config);

  TrainResult result;
  result.final_policy = policy_init;
  PolicyTable& policy = result.final_policy;
  // With beta = 0 the reference copy is never read.
  const PolicyTable* reference = config.beta_kl > 0.0 ? &policy_init : nullptr;
  AdamState adam;

  auto evaluate = [&](int step, TrainLogEntry* entry) {
    const auto rep = eval_search_mode(policy, world, validation, config.validation_samples, val_seed);
    if (entry != nullptr) {
      entry->val_tp = rep.tool_productivity;
      entry->val_accuracy = rep.accuracy;
      entry->val_tc = rep.mean_tool_calls;
    }
    if (step == 0 || rep.tool_productivity > result.best_val_tp) {
      result.best_val_tp = rep.tool_productivity;
      result.best_step = step;
      result.best_policy = policy;
    }
    if (hooks.on_checkpoint) hooks.on_checkpoint(step, policy, rep);
  };

  evaluate(0, nullptr);
  for (int step = 1; step <= config.steps; ++step) {
    const GroupBatch batch = collect_batch(policy, world, reward, config, step);
    TrainLogEntry entry;
    try {
      entry.diagnostics = policy_gradient_step(policy, reference, batch, config, adam);
    } catch (const TrainingAborted& e) {
      throw TrainingAborted(std::string(e.what()) + " (step " + std::to_string(step) + ")",
                            e.dump());
    }
    entry.diagnostics.step = step;
    if (step % config.eval_every == 0 || step == config.steps) evaluate(step, &entry);
    result.log.push_back(entry);
    if (hooks.on_log) hooks.on_log(entry);
  }
  return result;
}

}  // namespace helpseek
