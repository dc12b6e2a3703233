#include "helpseek/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace helpseek {
namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void require_keys(const Json& doc, std::string_view what, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional) {
  if (!doc.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  std::set<std::string> known;
  for (const auto* k : required) {
    known.insert(k);
    if (!doc.contains(k)) throw ConfigError(std::string(what) + ": missing key '" + k + "'");
  }
  for (const auto* k : optional) known.insert(k);
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
}

std::string content_hash(const Json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

Json to_json(const WorldConfig& world) {
  Json types = Json::array();
  for (const auto& t : world.types) {
    types.push_back({{"name", t.name}, {"hops", t.hops}, {"p_param", t.p_param}, {"weight", t.weight}});
  }
  return {{"types", types},
          {"rho", world.rho},
          {"L", world.max_searches},
          {"docs_per_search", world.docs_per_search},
          {"oracle_mode", world.oracle_mode},
          {"seed", world.seed}};
}

WorldConfig world_from_json(const Json& doc) {
  constexpr std::string_view what = "world config";
  require_keys(doc, what, {"types"}, {"rho", "L", "docs_per_search", "oracle_mode", "seed"});
  WorldConfig w;
  if (!doc.at("types").is_array()) throw ConfigError("world config: 'types' must be an array");
  for (const auto& t : doc.at("types")) {
    require_keys(t, "question type", {"name", "hops", "p_param"}, {"weight"});
    QuestionType qt;
    qt.name = get_as<std::string>(t, "name", "question type");
    qt.hops = get_as<int>(t, "hops", "question type");
    qt.p_param = get_as<double>(t, "p_param", "question type");
    if (t.contains("weight")) qt.weight = get_as<double>(t, "weight", "question type");
    w.types.push_back(std::move(qt));
  }
  if (doc.contains("rho")) w.rho = get_as<double>(doc, "rho", what);
  if (doc.contains("L")) w.max_searches = get_as<int>(doc, "L", what);
  if (doc.contains("docs_per_search")) w.docs_per_search = get_as<int>(doc, "docs_per_search", what);
  if (doc.contains("oracle_mode")) w.oracle_mode = get_as<bool>(doc, "oracle_mode", what);
  if (doc.contains("seed")) w.seed = get_as<std::uint64_t>(doc, "seed", what);
  w.check();
  return w;
}

std::string world_hash(const WorldConfig& world) { return content_hash(to_json(world)); }

Json to_json(const PolicyCheckpoint& ckpt) {
  const auto& p = ckpt.policy;
  const auto& logits = p.logits();
  std::vector<double> flat(logits.data(), logits.data() + logits.size());  // row-major
  return {{"format", "helpseek-policy/1"},
          {"num_types", p.num_types()},
          {"max_searches", p.max_searches()},
          {"max_hops", p.max_hops()},
          {"rows", logits.rows()},
          {"cols", logits.cols()},
          {"logits", flat},
          {"world_hash", ckpt.world_hash},
          {"config_hash", ckpt.config_hash},
          {"seed", ckpt.seed},
          {"step", ckpt.step}};
}

PolicyCheckpoint checkpoint_from_json(const Json& doc) {
  constexpr std::string_view what = "policy checkpoint";
  require_keys(doc, what,
               {"format", "num_types", "max_searches", "max_hops", "rows", "cols", "logits",
                "world_hash", "step"},
               {"config_hash", "seed"});
  if (get_as<std::string>(doc, "format", what) != "helpseek-policy/1") {
    throw ConfigError("policy checkpoint: unsupported format");
  }
  PolicyCheckpoint c;
  c.policy = PolicyTable(get_as<int>(doc, "num_types", what), get_as<int>(doc, "max_searches", what),
                         get_as<int>(doc, "max_hops", what));
  const auto rows = get_as<Eigen::Index>(doc, "rows", what);
  const auto cols = get_as<Eigen::Index>(doc, "cols", what);
  const auto flat = get_as<std::vector<double>>(doc, "logits", what);
  if (rows != c.policy.num_states() || cols != kNumActions ||
      flat.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError("policy checkpoint: logits do not match the table shape");
  }
  c.policy.logits() = Eigen::Map<const PolicyTable::Logits>(flat.data(), rows, cols);
  if (!c.policy.logits().allFinite()) throw ConfigError("policy checkpoint: non-finite logits");
  c.world_hash = get_as<std::string>(doc, "world_hash", what);
  if (doc.contains("config_hash")) c.config_hash = get_as<std::string>(doc, "config_hash", what);
  if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed", what);
  c.step = get_as<int>(doc, "step", what);
  return c;
}

Json to_json(const CorpusRow& row) {
  return {{"question_id", row.question_id},
          {"type_id", row.type_id},
          {"l_target", row.l_target},
          {"text", row.text},
          {"correct", row.correct}};
}

CorpusRow corpus_row_from_json(const Json& doc) {
  constexpr std::string_view what = "corpus row";
  require_keys(doc, what, {"question_id", "type_id", "l_target", "text", "correct"},
               {"config_hash", "seed"});
  return {get_as<std::string>(doc, "question_id", what), get_as<int>(doc, "type_id", what),
          get_as<int>(doc, "l_target", what), get_as<std::string>(doc, "text", what),
          get_as<bool>(doc, "correct", what)};
}

Json to_json(const TrajectoryRecord& record, const TagGrammar& grammar) {
  Json out = {{"question_id", record.trajectory.question_id},
              {"text", serialize(record.trajectory, grammar)},
              {"truncated", record.trajectory.truncated},
              {"search_count", record.trajectory.search_count()}};
  if (record.reward) {
    out["r_acc"] = record.reward->correct;
    out["r_help"] = record.reward->help;
    out["reward"] = record.reward->total;
  }
  return out;
}

TrajectoryRecord trajectory_record_from_json(const Json& doc, const TagGrammar& grammar) {
  constexpr std::string_view what = "trajectory record";
  require_keys(doc, what, {"question_id", "text", "truncated", "search_count"},
               {"r_acc", "r_help", "reward"});
  TrajectoryRecord rec;
  rec.trajectory = parse(get_as<std::string>(doc, "text", what), grammar);
  rec.trajectory.question_id = get_as<std::string>(doc, "question_id", what);
  if (rec.trajectory.truncated != get_as<bool>(doc, "truncated", what) ||
      rec.trajectory.search_count() != get_as<int>(doc, "search_count", what)) {
    throw ConfigError("trajectory record: fields disagree with the text");
  }
  if (doc.contains("r_acc")) {
    ScoredEntry s;
    s.correct = get_as<int>(doc, "r_acc", what);
    s.searches = rec.trajectory.search_count();
    s.help = doc.contains("r_help") ? get_as<double>(doc, "r_help", what) : 0.0;
    s.total = doc.contains("reward") ? get_as<double>(doc, "reward", what) : 0.0;
    rec.reward = s;
  }
  return rec;
}

Json to_json(const SearchModeReport& report) {
  Json buckets = Json::array();
  static constexpr const char* names[] = {"0", "1", "2+"};
  for (int b = 0; b < 3; ++b) {
    buckets.push_back({{"tc", names[b]},
                       {"fraction", report.buckets[b].fraction},
                       {"accuracy", optional_number(report.buckets[b].accuracy)}});
  }
  return {{"mode", "search"},
          {"accuracy", report.accuracy},
          {"mean_tool_calls", report.mean_tool_calls},
          {"tool_productivity", report.tool_productivity},
          {"buckets", buckets},
          {"samples_per_question", report.samples_per_question},
          {"num_records", report.num_records}};
}

Json to_json(const AbstentionReport& report) {
  Json by_type = Json::array();
  for (const auto& r : report.abstain_rate_by_type) by_type.push_back(optional_number(r));
  return {{"mode", "abstain"},
          {"overall_accuracy", report.overall_accuracy},
          {"precision", optional_number(report.precision)},
          {"abstain_rate", report.abstain_rate},
          {"abs0_pct", optional_number(report.abs0_pct)},
          {"abs1_pct", optional_number(report.abs1_pct)},
          {"delta", optional_number(report.delta)},
          {"abstain_rate_by_type", by_type},
          {"samples_per_question", report.samples_per_question},
          {"num_records", report.num_records},
          {"always_incorrect_questions", report.always_incorrect_questions},
          {"always_correct_questions", report.always_correct_questions}};
}

Json to_json(const TrainLogEntry& entry) {
  const auto& d = entry.diagnostics;
  Json out = {{"step", d.step},
              {"mean_reward", d.mean_reward},
              {"mean_tc", d.mean_tc},
              {"accuracy", d.accuracy},
              {"entropy", d.entropy},
              {"kl", optional_number(d.kl)},
              {"grad_norm", d.grad_norm},
              {"help_rate", d.help_rate}};
  if (entry.val_tp) {
    out["val_tp"] = *entry.val_tp;
    out["val_accuracy"] = optional_number(entry.val_accuracy);
    out["val_tc"] = optional_number(entry.val_tc);
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace helpseek
