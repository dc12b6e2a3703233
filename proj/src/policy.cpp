#include "helpseek/policy.hpp"

namespace helpseek {

Rollout sample_trajectory(const PolicyTable& policy, const QuestionSpec& question,
                          const WorldConfig& world, Rng& rng, const SampleOptions& options) {
  if (!policy.matches(world)) throw std::invalid_argument("policy table does not match world");

  Rollout out;
  EnvState state;
  EpisodeHelper helper(world, question, state, rng);
  const auto grammar = TagGrammar::for_mode(world.oracle_mode);

  const Generator generator = [&](const Trajectory&, Helper&) -> GeneratedAction {
    const Observation obs = observe(state, question, world);
    const Eigen::Index s = policy.state_index(obs);

    Decision d;
    d.state = s;
    if (options.mask_search_at_budget && state.searches >= world.max_searches) {
      d.action = Action::Answer;
      d.forced = true;
    } else {
      const auto logp = log_softmax(policy.logits().row(s));
      const bool search = bernoulli(rng, std::exp(logp(1)));
      d.action = search ? Action::Search : Action::Answer;
      d.log_prob = logp(static_cast<int>(d.action));
    }
    out.decisions.push_back(d);

    std::string text = "<" + grammar.think + ">" + std::string(kThinkPlaceholder) + "</" +
                       grammar.think + ">";
    if (d.action == Action::Search) {
      const std::string query = world.oracle_mode
                                    ? std::string("I need help")
                                    : question.question_id + " hop " +
                                          std::to_string(state.resolved_hops + 1);
      text += "<" + grammar.search + ">" + query + "</" + grammar.search + ">";
    } else {
      const bool ok = answer_outcome(state, question, world, rng) == 1;
      const std::string answer = ok ? question.gold_answer : wrong_answer(question, rng);
      text += "<" + grammar.answer + ">" + answer + "</" + grammar.answer + ">";
    }
    return {std::move(text), false};
  };

  InferenceConfig cfg;
  cfg.max_searches = world.max_searches;
  cfg.oracle_mode = world.oracle_mode;
  cfg.search_enabled = options.search_enabled;

  InferenceResult result = run_inference(question.question_id, generator, helper, cfg);
  out.trajectory = std::move(result.trajectory);
  out.abstained = result.abstained;
  if (const auto* ans = out.trajectory.answer()) out.correct = r_acc(*ans, question.gold_answer);
  return out;
}

}  // namespace helpseek
