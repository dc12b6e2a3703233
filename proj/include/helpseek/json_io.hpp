#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "helpseek/eval.hpp"
#include "helpseek/grpo.hpp"
#include "helpseek/policy.hpp"
#include "helpseek/protocol.hpp"
#include "helpseek/warmstart.hpp"
#include "helpseek/world.hpp"

namespace helpseek {

using Json = nlohmann::json;

/// Throws ConfigError unless `doc` is an object holding every required key
/// and nothing outside required + optional.
void require_keys(const Json& doc, std::string_view what, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {});

/// doc[key] as T; type mismatches become ConfigError.
template <typename T>
T get_as(const Json& doc, const char* key, std::string_view what) {
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
  }
}

/// 16 hex digits of FNV-1a over the compact dump (keys are sorted, so equal
/// documents hash equally).
std::string content_hash(const Json& doc);

Json to_json(const WorldConfig& world);
/// Throws ConfigError on a schema violation.
WorldConfig world_from_json(const Json& doc);
std::string world_hash(const WorldConfig& world);

struct PolicyCheckpoint {
  PolicyTable policy;
  std::string world_hash;
  std::string config_hash;
  std::uint64_t seed = 0;
  int step = 0;
};

Json to_json(const PolicyCheckpoint& ckpt);
PolicyCheckpoint checkpoint_from_json(const Json& doc);

Json to_json(const CorpusRow& row);
CorpusRow corpus_row_from_json(const Json& doc);

struct TrajectoryRecord {
  Trajectory trajectory;
  std::optional<ScoredEntry> reward;
};

/// {question_id, text, truncated, search_count[, r_acc, r_help, reward]}
Json to_json(const TrajectoryRecord& record, const TagGrammar& grammar);
TrajectoryRecord trajectory_record_from_json(const Json& doc, const TagGrammar& grammar);

Json to_json(const SearchModeReport& report);
Json to_json(const AbstentionReport& report);
Json to_json(const TrainLogEntry& entry);

Json read_json_file(const std::filesystem::path& path);
/// Writes `doc` pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);

}  // namespace helpseek
