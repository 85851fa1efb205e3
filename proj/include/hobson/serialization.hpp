#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hobson/classifier.hpp"
#include "hobson/corpus.hpp"
#include "hobson/gateway.hpp"
#include "hobson/metrics.hpp"
#include "hobson/parser.hpp"
#include "hobson/similarity.hpp"

namespace hobson {

// Where a persisted record came from inside a run.
struct RecordContext {
  std::string model;
  std::string dataset;
  double temperature = 0.0;
  int run_index = 0;

  friend bool operator==(const RecordContext&, const RecordContext&) = default;
};

struct ParsedRecord {
  RecordContext context;
  ParsedResponse parsed;
};

struct VerdictRecord {
  RecordContext context;
  BehaviorVerdict verdict;
};

struct PairRecord {
  RecordContext context;  // of the constrained run
  std::string scorer;
  SimilarityPair pair;
};

void to_json(nlohmann::json& j, PromptTier tier);
void from_json(const nlohmann::json& j, PromptTier& tier);

void to_json(nlohmann::json& j, const RelationInstance& v);
void to_json(nlohmann::json& j, const RecordContext& v);
void from_json(const nlohmann::json& j, RecordContext& v);
void to_json(nlohmann::json& j, const ParsedResponse& v);
void from_json(const nlohmann::json& j, ParsedResponse& v);
void to_json(nlohmann::json& j, const BehaviorVerdict& v);
void from_json(const nlohmann::json& j, BehaviorVerdict& v);
void to_json(nlohmann::json& j, const ParsedRecord& v);
void from_json(const nlohmann::json& j, ParsedRecord& v);
void to_json(nlohmann::json& j, const VerdictRecord& v);
void from_json(const nlohmann::json& j, VerdictRecord& v);
void to_json(nlohmann::json& j, const SimilarityPair& v);
void from_json(const nlohmann::json& j, SimilarityPair& v);
void to_json(nlohmann::json& j, const PairRecord& v);
void from_json(const nlohmann::json& j, PairRecord& v);
void to_json(nlohmann::json& j, const MetricsCounts& v);
void from_json(const nlohmann::json& j, MetricsCounts& v);
void to_json(nlohmann::json& j, const ReportKey& v);
void from_json(const nlohmann::json& j, ReportKey& v);
void to_json(nlohmann::json& j, const MetricsReport& v);
void from_json(const nlohmann::json& j, MetricsReport& v);
void to_json(nlohmann::json& j, const AgreementReport& v);
void from_json(const nlohmann::json& j, AgreementReport& v);
void to_json(nlohmann::json& j, const SimilarityKey& v);
void from_json(const nlohmann::json& j, SimilarityKey& v);
void to_json(nlohmann::json& j, const SimilarityReport& v);
void from_json(const nlohmann::json& j, SimilarityReport& v);

/// Serializes each element on its own line; returns the SHA-256 of the
/// written bytes. Throws Error when the file cannot be written.
template <typename T>
std::string write_jsonl(const std::filesystem::path& path,
                        const std::vector<T>& rows);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
  std::vector<T> out;
  for (const auto& row : read_jsonl(path)) out.push_back(row.get<T>());
  return out;
}

// Writes `content` and returns its SHA-256.
std::string write_file(const std::filesystem::path& path,
                       const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace hobson

#include "hobson/serialization_impl.hpp"
