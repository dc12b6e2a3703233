#include "helpseek/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace helpseek {

int Trajectory::search_count() const {
  int count = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!std::holds_alternative<Search>(steps[i])) continue;
    const bool served = i + 1 < steps.size() &&
                        std::holds_alternative<Documents>(steps[i + 1]);
    if (served) ++count;
  }
  return count;
}

int Trajectory::warning_count() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [](const Step& s) {
    return std::holds_alternative<Warning>(s);
  }));
}

const std::string* Trajectory::answer() const {
  if (steps.empty()) return nullptr;
  if (const auto* a = std::get_if<Answer>(&steps.back())) return &a->text;
  return nullptr;
}

void validate(const Trajectory& trajectory) {
  const auto& steps = trajectory.steps;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (is_environment_emitted(steps[i])) {
      if (i == 0 || !std::holds_alternative<Search>(steps[i - 1])) {
        throw std::invalid_argument("step " + std::to_string(i) +
                                    ": documents/warning must follow a search");
      }
    }
    if (const auto* docs = std::get_if<Documents>(&steps[i]); docs && docs->items.empty()) {
      throw std::invalid_argument("step " + std::to_string(i) + ": empty documents step");
    }
    if (std::holds_alternative<Answer>(steps[i]) && i + 1 != steps.size()) {
      throw std::invalid_argument("step " + std::to_string(i) + ": answer is not the final step");
    }
  }
  const bool answered = trajectory.answer() != nullptr;
  if (answered == trajectory.truncated) {
    throw std::invalid_argument(answered ? "truncated trajectory carries an answer"
                                         : "non-truncated trajectory lacks an answer");
  }
}

std::string_view to_string(RewardVariant variant) {
  switch (variant) {
    case RewardVariant::Exp: return "exp";
    case RewardVariant::Otc: return "otc";
    case RewardVariant::OtcStrict: return "otc-strict";
  }
  return "?";
}

RewardVariant parse_reward_variant(std::string_view name) {
  if (name == "exp") return RewardVariant::Exp;
  if (name == "otc") return RewardVariant::Otc;
  if (name == "otc-strict" || name == "otc_strict") return RewardVariant::OtcStrict;
  throw ConfigError("unknown reward variant '" + std::string(name) +
                    "' (expected exp, otc or otc-strict)");
}

void RewardConfig::check() const {
  if (!(lambda_decay > 0.0 && lambda_decay <= 1.0)) {
    throw ConfigError("lambda_decay must lie in (0, 1]");
  }
  if (c < 1) throw ConfigError("reward c must be a positive integer");
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char raw : text) {
    const auto ch = static_cast<unsigned char>(raw);
    if (std::isspace(ch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

int r_acc(std::string_view answer, std::string_view gold) {
  const auto a = normalize_answer(answer);
  if (a.empty()) return 0;
  return a == normalize_answer(gold) ? 1 : 0;
}

int n_eff(std::span<const GroupEntry> group) {
  if (group.empty()) throw std::invalid_argument("n_eff: empty group");
  int best = -1;
  for (const auto& e : group) {
    if (e.correct == 1 && (best < 0 || e.searches < best)) best = e.searches;
  }
  return best < 0 ? 0 : best;
}

namespace {

void require_counts(int m, int n) {
  if (m < 0 || n < 0) throw std::invalid_argument("search counts must be non-negative");
}

}  // namespace

double r_help_exp(int m, int n, double lambda_decay) {
  require_counts(m, n);
  if (!(lambda_decay > 0.0 && lambda_decay <= 1.0)) {
    throw ConfigError("lambda_decay must lie in (0, 1]");
  }
  if (m <= n) return 1.0;
  return std::pow(lambda_decay, m - n);
}

double r_help_otc(int m, int n, int c) {
  require_counts(m, n);
  if (c < 1) throw ConfigError("reward c must be a positive integer");
  if (m == 0 && n == 0) return 1.0;
  if (n == 0) return std::cos(m * std::numbers::pi / (2.0 * m + c));
  return std::sin(m * std::numbers::pi / (m + n));
}

double r_help_otc_strict(int m, int n, int c) {
  require_counts(m, n);
  if (c < 1) throw ConfigError("reward c must be a positive integer");
  if (m == 0 && n == 0) return 1.0;
  if (n == 0) return 0.0;
  return std::sin(m * std::numbers::pi / (m + n));
}

double r_help(const RewardConfig& config, int m, int n) {
  switch (config.variant) {
    case RewardVariant::Exp: return r_help_exp(m, n, config.lambda_decay);
    case RewardVariant::Otc: return r_help_otc(m, n, config.c);
    case RewardVariant::OtcStrict: return r_help_otc_strict(m, n, config.c);
  }
  throw std::logic_error("unreachable reward variant");
}

GroupRewards score_group(std::span<const GroupEntry> group, const RewardConfig& config) {
  GroupRewards out;
  out.n_eff = n_eff(group);
  out.entries.reserve(group.size());
  for (const auto& e : group) {
    ScoredEntry s;
    s.correct = e.correct;
    s.searches = e.searches;
    s.help = r_help(config, e.searches, out.n_eff);
    s.total = total_reward(e.correct, s.help);
    out.entries.push_back(s);
  }
  return out;
}

}  // namespace helpseek
