#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpseek/core.hpp"
#include "helpseek/world.hpp"

namespace helpseek {

enum class Action : int { Answer = 0, Search = 1 };
inline constexpr int kNumActions = 2;

// ---------------------------------------------------------------------------
// Two-action softmax primitives. All take a 1x2 row of logits.

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, kNumActions> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  Eigen::Matrix<Scalar, 1, kNumActions> e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, kNumActions> log_softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  const Scalar lse = top + std::log((logits.array() - top).exp().sum());
  return (logits.array() - lse).matrix();
}

/// Shannon entropy in nats.
template <typename Derived>
typename Derived::Scalar entropy_of(const Eigen::MatrixBase<Derived>& logits) {
  const auto p = softmax(logits);
  const auto lp = log_softmax(logits);
  return -(p.array() * lp.array()).sum();
}

/// dH/dz_j = -p_j (log p_j + H)
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, kNumActions> entropy_gradient(
    const Eigen::MatrixBase<Derived>& logits) {
  const auto p = softmax(logits);
  const auto lp = log_softmax(logits);
  const auto h = -(p.array() * lp.array()).sum();
  return (-p.array() * (lp.array() + h)).matrix();
}

/// KL(p || q) for two logit rows.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p_logits,
                                        const Eigen::MatrixBase<DerivedQ>& q_logits) {
  const auto p = softmax(p_logits);
  return (p.array() * (log_softmax(p_logits).array() - log_softmax(q_logits).array())).sum();
}

/// Gradient of KL(p || q) with respect to p's logits:
/// p_j (log p_j - log q_j - KL).
template <typename DerivedP, typename DerivedQ>
Eigen::Matrix<typename DerivedP::Scalar, 1, kNumActions> kl_gradient(
    const Eigen::MatrixBase<DerivedP>& p_logits, const Eigen::MatrixBase<DerivedQ>& q_logits) {
  const auto p = softmax(p_logits);
  const auto diff = (log_softmax(p_logits).array() - log_softmax(q_logits).array()).eval();
  const auto kl = (p.array() * diff).sum();
  return (p.array() * (diff - kl)).matrix();
}

// ---------------------------------------------------------------------------

/// Softmax logits over {ANSWER, SEARCH}, one row per observable state
/// (type_id, searches, resolved_hops).
template <typename Scalar_>
class BasicPolicyTable {
 public:
  using Scalar = Scalar_;
  using Logits = Eigen::Matrix<Scalar, Eigen::Dynamic, kNumActions, Eigen::RowMajor>;
  using Row = Eigen::Matrix<Scalar, 1, kNumActions>;

  BasicPolicyTable() = default;
  BasicPolicyTable(int num_types, int max_searches, int max_hops)
      : num_types_(num_types), max_searches_(max_searches), max_hops_(max_hops) {
    if (num_types < 1 || max_searches < 0 || max_hops < 1) {
      throw std::invalid_argument("policy table: invalid shape");
    }
    logits_ = Logits::Zero(num_states(), kNumActions);
  }

  static BasicPolicyTable for_world(const WorldConfig& world) {
    return BasicPolicyTable(world.num_types(), world.max_searches, world.max_hops());
  }

  [[nodiscard]] int num_types() const { return num_types_; }
  [[nodiscard]] int max_searches() const { return max_searches_; }
  [[nodiscard]] int max_hops() const { return max_hops_; }
  [[nodiscard]] Eigen::Index num_states() const {
    return static_cast<Eigen::Index>(num_types_) * (max_searches_ + 1) * (max_hops_ + 1);
  }

  [[nodiscard]] Eigen::Index state_index(const Observation& obs) const {
    if (obs.type_id < 0 || obs.type_id >= num_types_ || obs.searches < 0 ||
        obs.searches > max_searches_ || obs.resolved_hops < 0 || obs.resolved_hops > max_hops_) {
      throw std::out_of_range("observation outside the policy table");
    }
    return (static_cast<Eigen::Index>(obs.type_id) * (max_searches_ + 1) + obs.searches) *
               (max_hops_ + 1) +
           obs.resolved_hops;
  }

  [[nodiscard]] Observation observation(Eigen::Index state) const {
    check_state(state);
    const auto hops = static_cast<int>(state % (max_hops_ + 1));
    const auto rest = state / (max_hops_ + 1);
    return {static_cast<int>(rest / (max_searches_ + 1)),
            static_cast<int>(rest % (max_searches_ + 1)), hops};
  }

  void check_state(Eigen::Index state) const {
    if (state < 0 || state >= num_states()) throw std::out_of_range("state index out of range");
  }

  [[nodiscard]] bool same_shape(const BasicPolicyTable& other) const {
    return num_types_ == other.num_types_ && max_searches_ == other.max_searches_ &&
           max_hops_ == other.max_hops_;
  }

  [[nodiscard]] bool matches(const WorldConfig& world) const {
    return num_types_ == world.num_types() && max_searches_ == world.max_searches &&
           max_hops_ == world.max_hops();
  }

  Logits& logits() { return logits_; }
  [[nodiscard]] const Logits& logits() const { return logits_; }

  bool operator==(const BasicPolicyTable& other) const {
    return same_shape(other) && logits_ == other.logits_;
  }

 private:
  int num_types_ = 1;
  int max_searches_ = 0;
  int max_hops_ = 1;
  Logits logits_ = Logits::Zero(2, kNumActions);
};

using PolicyTable = BasicPolicyTable<double>;

template <typename Scalar>
typename BasicPolicyTable<Scalar>::Row action_prob(const BasicPolicyTable<Scalar>& policy,
                                                   Eigen::Index state) {
  policy.check_state(state);
  return softmax(policy.logits().row(state));
}

template <typename Scalar>
Scalar entropy(const BasicPolicyTable<Scalar>& policy, Eigen::Index state) {
  policy.check_state(state);
  return entropy_of(policy.logits().row(state));
}

/// Visitation-weighted mean KL(policy || init). `weights` has one entry per
/// state; a zero total weight gives 0.
template <typename Scalar>
Scalar kl_to_init(const BasicPolicyTable<Scalar>& policy, const BasicPolicyTable<Scalar>& init,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  if (!policy.same_shape(init)) throw std::invalid_argument("kl_to_init: table shapes differ");
  if (weights.size() != policy.num_states()) {
    throw std::invalid_argument("kl_to_init: one weight per state required");
  }
  const Scalar total = weights.sum();
  if (!(total > Scalar(0))) return Scalar(0);
  Scalar acc(0);
  for (Eigen::Index s = 0; s < policy.num_states(); ++s) {
    if (weights(s) == Scalar(0)) continue;
    acc += weights(s) * kl_divergence(policy.logits().row(s), init.logits().row(s));
  }
  return acc / total;
}

// ---------------------------------------------------------------------------
// Rollouts

struct Decision {
  Eigen::Index state = 0;
  Action action = Action::Answer;
  double log_prob = 0.0;
  bool forced = false;  ///< search masked at the budget; carries no gradient
};

struct Rollout {
  Trajectory trajectory;
  std::vector<Decision> decisions;
  int correct = 0;
  bool abstained = false;

  [[nodiscard]] int searches() const { return trajectory.search_count(); }
};

struct SampleOptions {
  bool search_enabled = true;
  /// Force ANSWER once the budget is spent instead of letting the policy
  /// hit the search-limit warning.
  bool mask_search_at_budget = true;
};

/// Placeholder reasoning text emitted before every action.
inline constexpr std::string_view kThinkPlaceholder = "...";

Rollout sample_trajectory(const PolicyTable& policy, const QuestionSpec& question,
                          const WorldConfig& world, Rng& rng, const SampleOptions& options = {});

}  // namespace helpseek
