#include "helpseek/eval.hpp"

#include <sstream>
#include <stdexcept>

namespace helpseek {
namespace {

int bucket_of(int searches) { return searches >= 2 ? 2 : searches; }

Rng sample_stream(std::uint64_t seed, const QuestionSpec& q, int sample) {
  return make_stream(seed, {fnv1a64(q.question_id), static_cast<std::uint64_t>(sample)});
}

void require_samples(int samples_per_question) {
  if (samples_per_question < 1) throw std::invalid_argument("samples_per_question must be >= 1");
}

}  // namespace

double tool_productivity(std::span<const OutcomeRecord> records) {
  if (records.empty()) throw std::invalid_argument("tool_productivity: no records");
  double acc = 0.0;
  for (const auto& r : records) acc += r.correct / (1.0 + r.searches);
  return acc / static_cast<double>(records.size());
}

SearchModeReport summarize_search_mode(std::span<const OutcomeRecord> records,
                                       int samples_per_question) {
  if (records.empty()) throw std::invalid_argument("summarize_search_mode: no records");
  SearchModeReport rep;
  rep.samples_per_question = samples_per_question;
  rep.num_records = static_cast<int>(records.size());
  std::array<int, 3> count{};
  std::array<int, 3> correct{};
  double acc = 0.0;
  double tc = 0.0;
  for (const auto& r : records) {
    acc += r.correct;
    tc += r.searches;
    const int b = bucket_of(r.searches);
    ++count[b];
    correct[b] += r.correct;
  }
  const auto n = static_cast<double>(records.size());
  rep.accuracy = acc / n;
  rep.mean_tool_calls = tc / n;
  rep.tool_productivity = tool_productivity(records);
  for (int b = 0; b < 3; ++b) {
    rep.buckets[b].fraction = count[b] / n;
    if (count[b] > 0) rep.buckets[b].accuracy = static_cast<double>(correct[b]) / count[b];
  }
  return rep;
}

SearchModeReport eval_search_mode(const PolicyTable& policy, const WorldConfig& world,
                                  std::span<const QuestionSpec> questions,
                                  int samples_per_question, std::uint64_t seed) {
  if (questions.empty()) throw std::invalid_argument("eval_search_mode: empty question set");
  require_samples(samples_per_question);
  std::vector<OutcomeRecord> records;
  records.reserve(questions.size() * static_cast<std::size_t>(samples_per_question));
  for (const auto& q : questions) {
    for (int k = 0; k < samples_per_question; ++k) {
      Rng rng = sample_stream(seed, q, k);
      const Rollout r = sample_trajectory(policy, q, world, rng);
      records.push_back({r.correct, r.searches()});
    }
  }
  return summarize_search_mode(records, samples_per_question);
}

std::optional<int> degenerate_bucket(const SearchModeReport& report, double threshold) {
  for (int b = 0; b < 3; ++b) {
    if (report.buckets[b].fraction >= threshold) return b;
  }
  return std::nullopt;
}

AnswerabilityProfile answerability_profile(const WorldConfig& world,
                                           std::span<const QuestionSpec> questions, int k_samples,
                                           Rng& rng, double threshold) {
  if (k_samples < 1) throw std::invalid_argument("answerability_profile: k_samples must be >= 1");
  AnswerabilityProfile prof;
  prof.k_samples = k_samples;
  prof.threshold = threshold;
  prof.questions.reserve(questions.size());
  for (const auto& q : questions) {
    QuestionAnswerability qa;
    qa.question_id = q.question_id;
    qa.samples = k_samples;
    const EnvState fresh;
    for (int i = 0; i < k_samples; ++i) qa.correct += answer_outcome(fresh, q, world, rng);
    qa.mean = static_cast<double>(qa.correct) / k_samples;
    qa.always_correct = qa.correct == k_samples;
    qa.always_incorrect = qa.correct == 0;
    qa.answerable = qa.mean > threshold;
    prof.questions.push_back(std::move(qa));
  }
  return prof;
}

AbstentionReport eval_abstention_mode(const PolicyTable& policy, const WorldConfig& world,
                                      std::span<const QuestionSpec> questions,
                                      const AnswerabilityProfile& profile,
                                      int samples_per_question, std::uint64_t seed) {
  if (questions.empty()) throw std::invalid_argument("eval_abstention_mode: empty question set");
  require_samples(samples_per_question);
  if (profile.questions.size() != questions.size()) {
    throw std::invalid_argument("answerability profile does not cover the question set");
  }

  AbstentionReport rep;
  rep.samples_per_question = samples_per_question;
  const auto ntypes = static_cast<std::size_t>(world.num_types());
  std::vector<int> type_records(ntypes, 0);
  std::vector<int> type_abstained(ntypes, 0);
  int records = 0, abstained = 0, correct = 0;
  int zero_records = 0, zero_abstained = 0;
  int one_records = 0, one_abstained = 0;

  SampleOptions opts;
  opts.search_enabled = false;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& q = questions[i];
    const auto& qa = profile.questions[i];
    if (qa.question_id != q.question_id) {
      throw std::invalid_argument("answerability profile order differs from the question set");
    }
    rep.always_incorrect_questions += qa.always_incorrect;
    rep.always_correct_questions += qa.always_correct;
    for (int k = 0; k < samples_per_question; ++k) {
      Rng rng = sample_stream(seed, q, k);
      const Rollout r = sample_trajectory(policy, q, world, rng, opts);
      if (r.searches() != 0) throw std::logic_error("abstention-mode rollout performed a search");
      ++records;
      ++type_records[static_cast<std::size_t>(q.type_id)];
      if (r.abstained) {
        ++abstained;
        ++type_abstained[static_cast<std::size_t>(q.type_id)];
      }
      correct += r.correct;
      if (qa.always_incorrect) {
        ++zero_records;
        zero_abstained += r.abstained;
      }
      if (qa.always_correct) {
        ++one_records;
        one_abstained += r.abstained;
      }
    }
  }

  rep.num_records = records;
  rep.overall_accuracy = static_cast<double>(correct) / records;
  rep.abstain_rate = static_cast<double>(abstained) / records;
  if (abstained < records) rep.precision = static_cast<double>(correct) / (records - abstained);
  if (zero_records > 0) rep.abs0_pct = 100.0 * zero_abstained / zero_records;
  if (one_records > 0) rep.abs1_pct = 100.0 * one_abstained / one_records;
  if (rep.abs0_pct && rep.abs1_pct) rep.delta = *rep.abs0_pct - *rep.abs1_pct;
  rep.abstain_rate_by_type.resize(ntypes);
  for (std::size_t t = 0; t < ntypes; ++t) {
    if (type_records[t] > 0) {
      rep.abstain_rate_by_type[t] = static_cast<double>(type_abstained[t]) / type_records[t];
    }
  }
  return rep;
}

std::string search_buckets_csv(const SearchModeReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "bucket,fraction,accuracy\n";
  static constexpr const char* names[] = {"0", "1", "2+"};
  for (int b = 0; b < 3; ++b) {
    os << names[b] << ',' << report.buckets[b].fraction << ',';
    if (report.buckets[b].accuracy) os << *report.buckets[b].accuracy;
    os << '\n';
  }
  return os.str();
}

}  // namespace helpseek
