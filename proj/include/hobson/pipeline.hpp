#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hobson/classifier.hpp"
#include "hobson/corpus.hpp"
#include "hobson/gateway.hpp"
#include "hobson/http_provider.hpp"
#include "hobson/prompt.hpp"
#include "hobson/report.hpp"

namespace hobson {

inline constexpr std::string_view kToolVersion = "0.3.0";

enum class ProviderMode { Live, CacheOnly, Synthetic };
enum class ScorerKind { Lexical, Embedding, Judge };

std::string_view to_string(ProviderMode mode);
ProviderMode parse_provider_mode(std::string_view text);
std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view text);

struct RunConfig {
  std::filesystem::path dataset_path;
  DatasetFormat dataset_format = DatasetFormat::GenericJsonl;
  std::optional<std::string> dataset_tag;
  std::string split = "unspecified";
  // Built-in registry for the dataset tag when unset.
  std::optional<std::filesystem::path> registry_path;
  bool only_no_relation = true;
  std::optional<std::size_t> count_subset;

  std::vector<PromptTier> tiers = {kAllTiers.begin(), kAllTiers.end()};
  std::vector<std::string> models = {"synthetic-annotator"};
  std::vector<double> temperatures = {0.2, 0.5};
  int runs_per_setting = 3;
  bool agreement = true;
  // Restrict temperatures to the published protocol (0.2 and 0.5).
  bool replication_profile = false;

  ProviderMode provider = ProviderMode::Synthetic;
  std::optional<std::filesystem::path> profile_path;
  // Overrides the profile's seed.
  std::optional<std::uint64_t> seed;
  HttpEndpoint endpoint;
  std::optional<std::string> system_prompt;
  int max_tokens = 1024;
  std::size_t parallelism = 4;
  RetryPolicy retry;

  std::filesystem::path output_dir = "hobson-out";
  // <output_dir>/cache when unset.
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> templates_dir;
  RenderOptions render;
  ClassifierConfig classifier;

  bool similarity = true;
  ScorerKind scorer = ScorerKind::Lexical;
  double similarity_threshold = 0.7;
  // Hand the instance sentence to the scorer along with the labels.
  bool similarity_with_context = false;
  std::string judge_model;
  double judge_temperature = 0.0;
  HttpEndpoint embedding_endpoint;
  std::string embedding_model = "text-embedding-3-small";

  /// Throws ContractError describing the first invalid field.
  void validate() const;

  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // SHA-256 of the canonical JSON form.
  std::string digest() const;
};

struct ArtifactRecord {
  std::string path;  // relative to the output directory
  std::size_t rows = 0;
  std::string sha256;
};

struct StageRecord {
  std::string name;
  bool completed = false;
  std::vector<ArtifactRecord> artifacts;
  // sha256(previous stage chain digest + this stage's artifact digests)
  std::string chain_digest;
  std::int64_t elapsed_ms = 0;
  std::map<std::string, std::int64_t> counts;
};

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string config_digest;
  std::string status = "running";  // "complete" or "failed" once written
  std::string failed_stage;
  std::string error;
  std::vector<StageRecord> stages;
  GatewayStats provider_stats;
  std::int64_t wall_ms = 0;

  bool ok() const { return status == "complete"; }
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
};

/// Runs corpus -> prompts -> provider -> parser -> classifier -> metrics,
/// agreement and similarity for every model x temperature x tier x run, and
/// writes every stage's artifacts plus manifest.json to the output
/// directory. A failing stage stops the run; the returned (and written)
/// manifest then has status "failed" and lists the stages that completed.
/// Invalid configs throw before anything is written.
RunManifest run(const RunConfig& config);

// Reads metrics.json, agreement.json and similarity.json from a finished run.
ReportBundle load_report_bundle(const std::filesystem::path& output_dir);

}  // namespace hobson
