#include "hobson/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <tuple>

#include "hobson/digest.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"
#include "hobson/metrics.hpp"
#include "hobson/parser.hpp"
#include "hobson/serialization.hpp"
#include "hobson/similarity.hpp"
#include "hobson/synth.hpp"

namespace hobson {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json endpoint_to_json(const HttpEndpoint& e) {
  return {{"base_url", e.base_url},
          {"path_prefix", e.path_prefix},
          {"api_key_env", e.api_key_env},
          {"timeout_seconds", e.timeout_seconds}};
}

HttpEndpoint endpoint_from_json(const json& j) {
  HttpEndpoint e;
  for (const auto& [key, value] : j.items()) {
    if (key == "base_url") {
      e.base_url = value.get<std::string>();
    } else if (key == "path_prefix") {
      e.path_prefix = value.get<std::string>();
    } else if (key == "api_key_env") {
      e.api_key_env = value.get<std::string>();
    } else if (key == "timeout_seconds") {
      e.timeout_seconds = value.get<int>();
    } else {
      throw InputError("unknown endpoint field: " + key);
    }
  }
  return e;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json path_json(const std::optional<fs::path>& p) {
  return p ? json(p->generic_string()) : json(nullptr);
}

std::int64_t elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

// Where one request sits in the model x temperature x tier x run x instance
// grid.
struct Slot {
  std::size_t model = 0;
  std::size_t temperature = 0;
  PromptTier tier = PromptTier::Constrained;
  int run = 0;
  std::size_t instance = 0;
};

struct Response {
  Slot slot;
  std::string digest;
  std::string text;
  std::string provider;
};

// Metrics and agreement cell.
using CellKey = std::tuple<std::size_t, std::string, PromptTier, std::size_t>;

class ManifestWriter {
 public:
  ManifestWriter(RunManifest& manifest, fs::path out_dir)
      : manifest_(manifest), out_(std::move(out_dir)) {}

  void begin(std::string name) {
    current_ = StageRecord{};
    current_.name = std::move(name);
    started_ = std::chrono::steady_clock::now();
  }

  const std::string& current_name() const { return current_.name; }

  void artifact(const std::string& rel, std::size_t rows, std::string sha) {
    current_.artifacts.push_back({rel, rows, std::move(sha)});
  }

  void count(const std::string& key, std::int64_t value) { current_.counts[key] = value; }

  void finish() {
    std::string material = chain_;
    for (const auto& a : current_.artifacts) material += a.path + ":" + a.sha256 + "\n";
    chain_ = sha256_hex(material);
    current_.chain_digest = chain_;
    current_.completed = true;
    current_.elapsed_ms = elapsed_since(started_);
    manifest_.stages.push_back(std::move(current_));
    current_ = StageRecord{};
    flush();
  }

  void flush() const { write_file(out_ / "manifest.json", manifest_.to_json().dump(2) + "\n"); }

 private:
  RunManifest& manifest_;
  fs::path out_;
  StageRecord current_;
  std::string chain_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace

std::string_view to_string(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::Live:
      return "live";
    case ProviderMode::CacheOnly:
      return "cache_only";
    case ProviderMode::Synthetic:
      return "synthetic";
  }
  return "synthetic";
}

ProviderMode parse_provider_mode(std::string_view text) {
  if (text == "live") return ProviderMode::Live;
  if (text == "cache_only" || text == "cache-only") return ProviderMode::CacheOnly;
  if (text == "synthetic") return ProviderMode::Synthetic;
  throw ContractError("unknown provider mode: " + std::string(text));
}

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::Lexical:
      return "lexical";
    case ScorerKind::Embedding:
      return "embedding";
    case ScorerKind::Judge:
      return "judge";
  }
  return "lexical";
}

ScorerKind parse_scorer_kind(std::string_view text) {
  if (text == "lexical") return ScorerKind::Lexical;
  if (text == "embedding") return ScorerKind::Embedding;
  if (text == "judge") return ScorerKind::Judge;
  throw ContractError("unknown similarity scorer: " + std::string(text));
}

void RunConfig::validate() const {
  if (dataset_path.empty()) throw ContractError("dataset path is required");
  if (tiers.empty()) throw ContractError("at least one prompt tier is required");
  if (std::set<PromptTier>(tiers.begin(), tiers.end()).size() != tiers.size()) {
    throw ContractError("prompt tiers must be distinct");
  }
  if (models.empty()) throw ContractError("at least one model is required");
  if (std::set<std::string>(models.begin(), models.end()).size() != models.size()) {
    throw ContractError("models must be distinct");
  }
  for (const auto& m : models) {
    if (m.empty()) throw ContractError("model names must be non-empty");
  }
  if (temperatures.empty()) throw ContractError("at least one temperature is required");
  if (std::set<double>(temperatures.begin(), temperatures.end()).size() !=
      temperatures.size()) {
    throw ContractError("temperatures must be distinct");
  }
  for (double t : temperatures) {
    if (!(t >= 0.0 && t <= 2.0)) throw ContractError("temperature out of range [0, 2]");
    if (replication_profile && t != 0.2 && t != 0.5) {
      throw ContractError("replication profile allows only temperatures 0.2 and 0.5");
    }
  }
  if (runs_per_setting < 1) throw ContractError("runs_per_setting must be >= 1");
  if (count_subset && *count_subset == 0) throw ContractError("count_subset must be >= 1");
  if (parallelism < 1) throw ContractError("parallelism must be >= 1");
  if (max_tokens < 1) throw ContractError("max_tokens must be >= 1");
  if (retry.max_attempts < 1) throw ContractError("retry.max_attempts must be >= 1");
  if (provider == ProviderMode::Live && endpoint.base_url.empty()) {
    throw ContractError("live provider needs endpoint.base_url");
  }
  if (!(similarity_threshold > 0.0 && similarity_threshold < 1.0)) {
    throw ContractError("similarity_threshold must lie strictly between 0 and 1");
  }
  if (similarity && scorer == ScorerKind::Judge) {
    if (judge_model.empty()) throw ContractError("judge scorer needs judge_model");
    // Cache-only runs replay judge replies; the others need a live endpoint.
    if (provider != ProviderMode::CacheOnly && endpoint.base_url.empty()) {
      throw ContractError("judge scorer needs endpoint.base_url");
    }
  }
  if (similarity && scorer == ScorerKind::Embedding && embedding_endpoint.base_url.empty()) {
    throw ContractError("embedding scorer needs embedding_endpoint.base_url");
  }
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("run config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "dataset") {
        c.dataset_path = v.get<std::string>();
      } else if (key == "format") {
        c.dataset_format = parse_dataset_format(v.get<std::string>());
      } else if (key == "dataset_tag") {
        if (!v.is_null()) c.dataset_tag = v.get<std::string>();
      } else if (key == "split") {
        c.split = v.get<std::string>();
      } else if (key == "registry") {
        if (!v.is_null()) c.registry_path = v.get<std::string>();
      } else if (key == "only_no_relation") {
        c.only_no_relation = v.get<bool>();
      } else if (key == "count_subset") {
        if (!v.is_null()) c.count_subset = v.get<std::size_t>();
      } else if (key == "tiers") {
        c.tiers.clear();
        for (const auto& t : v) c.tiers.push_back(parse_tier(t.get<std::string>()));
      } else if (key == "models") {
        c.models = v.get<std::vector<std::string>>();
      } else if (key == "temperatures") {
        c.temperatures = v.get<std::vector<double>>();
      } else if (key == "runs_per_setting") {
        c.runs_per_setting = v.get<int>();
      } else if (key == "agreement") {
        c.agreement = v.get<bool>();
      } else if (key == "replication_profile") {
        c.replication_profile = v.get<bool>();
      } else if (key == "provider") {
        c.provider = parse_provider_mode(v.get<std::string>());
      } else if (key == "profile") {
        if (!v.is_null()) c.profile_path = v.get<std::string>();
      } else if (key == "seed") {
        if (!v.is_null()) c.seed = v.get<std::uint64_t>();
      } else if (key == "endpoint") {
        c.endpoint = endpoint_from_json(v);
      } else if (key == "system_prompt") {
        if (!v.is_null()) c.system_prompt = v.get<std::string>();
      } else if (key == "max_tokens") {
        c.max_tokens = v.get<int>();
      } else if (key == "parallelism") {
        c.parallelism = v.get<std::size_t>();
      } else if (key == "retry") {
        for (const auto& [rk, rv] : v.items()) {
          if (rk == "max_attempts") {
            c.retry.max_attempts = rv.get<int>();
          } else if (rk == "initial_backoff_ms") {
            c.retry.initial_backoff = std::chrono::milliseconds{rv.get<std::int64_t>()};
          } else if (rk == "multiplier") {
            c.retry.multiplier = rv.get<double>();
          } else if (rk == "max_backoff_ms") {
            c.retry.max_backoff = std::chrono::milliseconds{rv.get<std::int64_t>()};
          } else {
            throw InputError("unknown retry field: " + rk);
          }
        }
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "cache_dir") {
        if (!v.is_null()) c.cache_dir = v.get<std::string>();
      } else if (key == "templates_dir") {
        if (!v.is_null()) c.templates_dir = v.get<std::string>();
      } else if (key == "list_no_relation_in_options") {
        c.render.list_no_relation_in_options = v.get<bool>();
      } else if (key == "count_suboptimal_cb") {
        c.classifier.count_suboptimal_cb = v.get<bool>();
      } else if (key == "similarity") {
        c.similarity = v.get<bool>();
      } else if (key == "scorer") {
        c.scorer = parse_scorer_kind(v.get<std::string>());
      } else if (key == "similarity_threshold") {
        c.similarity_threshold = v.get<double>();
      } else if (key == "similarity_with_context") {
        c.similarity_with_context = v.get<bool>();
      } else if (key == "judge_model") {
        c.judge_model = v.get<std::string>();
      } else if (key == "judge_temperature") {
        c.judge_temperature = v.get<double>();
      } else if (key == "embedding_endpoint") {
        c.embedding_endpoint = endpoint_from_json(v);
      } else if (key == "embedding_model") {
        c.embedding_model = v.get<std::string>();
      } else {
        throw InputError("unknown config field: " + key);
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config: " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw InputError("config is not valid JSON: " + path.string());
  RunConfig c = from_json(doc);
  // Input paths in a config file are relative to the file.
  const fs::path base = path.parent_path();
  auto anchor = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  anchor(c.dataset_path);
  if (c.registry_path) anchor(*c.registry_path);
  if (c.profile_path) anchor(*c.profile_path);
  if (c.templates_dir) anchor(*c.templates_dir);
  return c;
}

json RunConfig::to_json() const {
  json tier_names = json::array();
  for (PromptTier t : tiers) tier_names.push_back(std::string(hobson::to_string(t)));
  return {
      {"dataset", dataset_path.generic_string()},
      {"format", std::string(hobson::to_string(dataset_format))},
      {"dataset_tag", optional_json(dataset_tag)},
      {"split", split},
      {"registry", path_json(registry_path)},
      {"only_no_relation", only_no_relation},
      {"count_subset", optional_json(count_subset)},
      {"tiers", tier_names},
      {"models", models},
      {"temperatures", temperatures},
      {"runs_per_setting", runs_per_setting},
      {"agreement", agreement},
      {"replication_profile", replication_profile},
      {"provider", std::string(hobson::to_string(provider))},
      {"profile", path_json(profile_path)},
      {"seed", optional_json(seed)},
      {"endpoint", endpoint_to_json(endpoint)},
      {"system_prompt", optional_json(system_prompt)},
      {"max_tokens", max_tokens},
      {"parallelism", parallelism},
      {"retry",
       {{"max_attempts", retry.max_attempts},
        {"initial_backoff_ms", retry.initial_backoff.count()},
        {"multiplier", retry.multiplier},
        {"max_backoff_ms", retry.max_backoff.count()}}},
      {"output_dir", output_dir.generic_string()},
      {"cache_dir", path_json(cache_dir)},
      {"templates_dir", path_json(templates_dir)},
      {"list_no_relation_in_options", render.list_no_relation_in_options},
      {"count_suboptimal_cb", classifier.count_suboptimal_cb},
      {"similarity", similarity},
      {"scorer", std::string(hobson::to_string(scorer))},
      {"similarity_threshold", similarity_threshold},
      {"similarity_with_context", similarity_with_context},
      {"judge_model", judge_model},
      {"judge_temperature", judge_temperature},
      {"embedding_endpoint", endpoint_to_json(embedding_endpoint)},
      {"embedding_model", embedding_model},
  };
}

std::string RunConfig::digest() const { return sha256_hex(to_json().dump()); }

json RunManifest::to_json() const {
  json stage_list = json::array();
  for (const auto& s : stages) {
    json artifacts = json::array();
    for (const auto& a : s.artifacts) {
      artifacts.push_back({{"path", a.path}, {"rows", a.rows}, {"sha256", a.sha256}});
    }
    stage_list.push_back({{"name", s.name},
                          {"completed", s.completed},
                          {"artifacts", artifacts},
                          {"chain_digest", s.chain_digest},
                          {"elapsed_ms", s.elapsed_ms},
                          {"counts", s.counts}});
  }
  return {{"tool_version", tool_version},
          {"config_digest", config_digest},
          {"status", status},
          {"failed_stage", failed_stage},
          {"error", error},
          {"stages", stage_list},
          {"provider_stats",
           {{"provider_calls", provider_stats.provider_calls},
            {"cache_hits", provider_stats.cache_hits},
            {"retries", provider_stats.retries},
            {"failures", provider_stats.failures}}},
          {"wall_ms", wall_ms}};
}

RunManifest RunManifest::from_json(const json& doc) {
  RunManifest m;
  m.tool_version = doc.value("tool_version", "");
  m.config_digest = doc.value("config_digest", "");
  m.status = doc.value("status", "");
  m.failed_stage = doc.value("failed_stage", "");
  m.error = doc.value("error", "");
  for (const auto& s : doc.value("stages", json::array())) {
    StageRecord r;
    r.name = s.value("name", "");
    r.completed = s.value("completed", false);
    r.chain_digest = s.value("chain_digest", "");
    r.elapsed_ms = s.value("elapsed_ms", std::int64_t{0});
    r.counts = s.value("counts", std::map<std::string, std::int64_t>{});
    for (const auto& a : s.value("artifacts", json::array())) {
      r.artifacts.push_back({a.value("path", ""), a.value("rows", std::size_t{0}),
                             a.value("sha256", "")});
    }
    m.stages.push_back(std::move(r));
  }
  if (doc.contains("provider_stats")) {
    const json& p = doc["provider_stats"];
    m.provider_stats.provider_calls = p.value("provider_calls", std::int64_t{0});
    m.provider_stats.cache_hits = p.value("cache_hits", std::int64_t{0});
    m.provider_stats.retries = p.value("retries", std::int64_t{0});
    m.provider_stats.failures = p.value("failures", std::int64_t{0});
  }
  m.wall_ms = doc.value("wall_ms", std::int64_t{0});
  return m;
}

RunManifest run(const RunConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = config.output_dir;
  fs::create_directories(out);

  RunManifest manifest;
  manifest.config_digest = config.digest();
  ManifestWriter stages(manifest, out);
  std::shared_ptr<Gateway> gateway;

  auto write_rows = [&](const std::string& rel, const auto& rows) {
    stages.artifact(rel, rows.size(), write_jsonl(out / rel, rows));
  };

  try {
    stages.begin("config");
    stages.artifact("config.json", 1, write_file(out / "config.json", config.to_json().dump(2) + "\n"));
    stages.finish();

    // ---- corpus
    stages.begin("corpus");
    LoadOptions load_options;
    load_options.dataset = config.dataset_tag;
    load_options.split = config.split;
    LoadResult loaded = load_dataset(config.dataset_path, config.dataset_format, load_options);
    std::vector<RelationInstance> selected =
        config.only_no_relation ? filter_no_relation(loaded.instances) : loaded.instances;

    std::map<std::string, OptionRegistry> registries;
    auto registry_for = [&](const std::string& dataset) -> const OptionRegistry& {
      auto it = registries.find(dataset);
      if (it != registries.end()) return it->second;
      OptionRegistry r = config.registry_path ? OptionRegistry::from_file(*config.registry_path)
                                              : OptionRegistry::builtin(dataset);
      return registries.emplace(dataset, std::move(r)).first->second;
    };

    std::vector<RelationInstance> instances;
    std::vector<OptionSet> option_sets;
    std::int64_t uncovered = 0;
    for (auto& inst : selected) {
      if (config.count_subset && instances.size() >= *config.count_subset) break;
      try {
        OptionSet options = option_set_for(inst, registry_for(inst.dataset));
        option_sets.push_back(std::move(options));
        instances.push_back(std::move(inst));
      } catch (const ContractError& e) {
        ++uncovered;
        loaded.rejects.push_back({json(inst).dump(), e.what()});
      }
    }
    write_rejects(out / "rejects.jsonl", loaded.rejects);
    stages.artifact("rejects.jsonl", loaded.rejects.size(),
                    sha256_hex(read_file(out / "rejects.jsonl")));
    write_rows("instances.jsonl", instances);
    stages.count("loaded", static_cast<std::int64_t>(loaded.instances.size()));
    stages.count("rejected", static_cast<std::int64_t>(loaded.rejects.size()) - uncovered);
    stages.count("uncovered", uncovered);
    stages.count("selected", static_cast<std::int64_t>(instances.size()));
    if (instances.empty()) throw Error("no instances selected from " + config.dataset_path.string());
    stages.finish();

    // ---- prompts
    stages.begin("prompts");
    const TemplateSet templates = config.templates_dir
                                      ? TemplateSet::from_directory(*config.templates_dir)
                                      : TemplateSet::defaults();
    std::map<std::pair<PromptTier, std::size_t>, RenderedPrompt> prompts;
    std::vector<json> prompt_rows;
    for (PromptTier tier : config.tiers) {
      for (std::size_t i = 0; i < instances.size(); ++i) {
        RenderedPrompt p = render(instances[i], tier, option_sets[i], templates, config.render);
        prompt_rows.push_back({{"instance_id", p.instance_id},
                               {"tier", tier},
                               {"options", p.options_used},
                               {"text", p.text}});
        prompts.emplace(std::pair(tier, i), std::move(p));
      }
    }
    write_rows("prompts.jsonl", prompt_rows);
    stages.count("prompts", static_cast<std::int64_t>(prompt_rows.size()));
    stages.finish();

    // ---- provider
    stages.begin("provider");
    std::optional<AnnotatorProfile> profile;
    std::shared_ptr<CompletionProvider> provider;
    CacheMode cache_mode = CacheMode::ReadWrite;
    switch (config.provider) {
      case ProviderMode::Synthetic:
        profile = config.profile_path ? AnnotatorProfile::from_file(*config.profile_path)
                                      : AnnotatorProfile::builtin();
        if (config.seed) profile->seed = *config.seed;
        for (const auto& [dataset, registry] : registries) profile->validate_against(registry);
        provider = std::make_shared<SyntheticProvider>(*profile);
        break;
      case ProviderMode::Live:
        provider = std::make_shared<ChatCompletionsProvider>(config.endpoint, config.system_prompt);
        break;
      case ProviderMode::CacheOnly:
        cache_mode = CacheMode::ReadOnly;
        break;
    }
    auto cache = std::make_shared<ResponseCache>(config.cache_dir.value_or(out / "cache"));
    gateway = std::make_shared<Gateway>(provider, cache, cache_mode, config.retry);

    std::vector<Slot> slots;
    std::vector<CompletionRequest> requests;
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      for (std::size_t t = 0; t < config.temperatures.size(); ++t) {
        for (PromptTier tier : config.tiers) {
          for (int r = 0; r < config.runs_per_setting; ++r) {
            for (std::size_t i = 0; i < instances.size(); ++i) {
              slots.push_back({m, t, tier, r, i});
              CompletionRequest req;
              req.prompt = prompts.at({tier, i});
              req.model = config.models[m];
              req.temperature = config.temperatures[t];
              req.run_index = r;
              req.max_tokens = config.max_tokens;
              requests.push_back(std::move(req));
            }
          }
        }
      }
    }
    const std::vector<BatchSlot> results = gateway->complete_batch(requests, config.parallelism);

    std::vector<Response> responses;
    std::vector<json> response_rows, failure_rows;
    std::vector<std::string> missing;
    for (std::size_t k = 0; k < results.size(); ++k) {
      const Slot& s = slots[k];
      const CompletionRequest& req = requests[k];
      if (!results[k].ok()) {
        const std::string digest =
            cache_key(req.prompt.text, req.model, req.temperature, req.run_index);
        if (results[k].failure == FailureKind::CacheMiss) missing.push_back(digest);
        failure_rows.push_back({{"request_digest", digest},
                                {"instance_id", req.prompt.instance_id},
                                {"tier", s.tier},
                                {"model", req.model},
                                {"temperature", req.temperature},
                                {"run_index", req.run_index},
                                {"kind", std::string(to_string(*results[k].failure))},
                                {"error", results[k].error}});
        continue;
      }
      const RawResponse& raw = *results[k].response;
      responses.push_back({s, raw.request_digest, raw.text, raw.provider});
      response_rows.push_back({{"request_digest", raw.request_digest},
                               {"instance_id", raw.instance_id},
                               {"tier", s.tier},
                               {"model", raw.model},
                               {"temperature", raw.temperature},
                               {"run_index", raw.run_index},
                               {"provider", raw.provider},
                               {"text", raw.text}});
    }
    write_rows("responses.jsonl", response_rows);
    if (!failure_rows.empty()) write_rows("provider_failures.jsonl", failure_rows);
    const GatewayStats provider_stats = gateway->stats();
    manifest.provider_stats = provider_stats;
    stages.count("requests", static_cast<std::int64_t>(requests.size()));
    stages.count("responses", static_cast<std::int64_t>(responses.size()));
    stages.count("failures", static_cast<std::int64_t>(failure_rows.size()));
    if (!missing.empty()) {
      std::string list;
      for (std::size_t k = 0; k < missing.size(); ++k) {
        if (k == 10) {
          list += ", ... (" + std::to_string(missing.size() - 10) + " more)";
          break;
        }
        list += (k ? ", " : "") + missing[k];
      }
      throw Error("cache miss: " + std::to_string(missing.size()) + " missing digest(s): " + list);
    }
    if (!failure_rows.empty()) {
      throw Error(std::to_string(failure_rows.size()) + " request(s) failed; first: " +
                  failure_rows.front()["error"].get<std::string>());
    }
    stages.finish();

    auto context_of = [&](const Slot& s) {
      return RecordContext{config.models[s.model], instances[s.instance].dataset,
                           config.temperatures[s.temperature], s.run};
    };

    // ---- parse
    stages.begin("parse");
    std::vector<ParsedRecord> parsed;
    parsed.reserve(responses.size());
    std::int64_t n_ok = 0, n_no_conclusion = 0, n_noise = 0;
    for (const auto& r : responses) {
      ParsedRecord rec{context_of(r.slot),
                       parse(instances[r.slot.instance].id, r.text, r.slot.tier,
                             option_sets[r.slot.instance])};
      switch (rec.parsed.status) {
        case ParseStatus::Ok:
          ++n_ok;
          break;
        case ParseStatus::NoConclusion:
          ++n_no_conclusion;
          break;
        case ParseStatus::Noise:
          ++n_noise;
          break;
      }
      parsed.push_back(std::move(rec));
    }
    if (n_ok + n_no_conclusion + n_noise != static_cast<std::int64_t>(responses.size())) {
      throw ContractError("parser conservation violated");
    }
    write_rows("parsed.jsonl", parsed);
    stages.count("ok", n_ok);
    stages.count("no_conclusion", n_no_conclusion);
    stages.count("noise", n_noise);
    stages.finish();

    // ---- classify
    stages.begin("classify");
    std::vector<VerdictRecord> verdicts;
    verdicts.reserve(parsed.size());
    std::int64_t non_noise = 0;
    for (std::size_t k = 0; k < parsed.size(); ++k) {
      const Slot& s = responses[k].slot;
      BehaviorVerdict v = classify(parsed[k].parsed, option_sets[s.instance], s.tier,
                                   config.classifier);
      if (auto broken = verdict_invariant_violation(v); !broken.empty()) {
        throw ContractError("verdict for " + v.instance_id + " violates: " + broken);
      }
      non_noise += !v.is_noise;
      verdicts.push_back({parsed[k].context, std::move(v)});
    }
    if (non_noise != n_ok + n_no_conclusion) throw ContractError("classifier conservation violated");
    write_rows("verdicts.jsonl", verdicts);
    stages.count("verdicts", static_cast<std::int64_t>(verdicts.size()));
    stages.count("non_noise", non_noise);

    if (profile) {
      // Regenerated from the stream rather than read back, so the check holds
      // for cached replies as well.
      std::vector<json> truth;
      std::int64_t mismatches = 0;
      for (std::size_t k = 0; k < responses.size(); ++k) {
        const Slot& s = responses[k].slot;
        const RenderedPrompt& p = prompts.at({s.tier, s.instance});
        const SyntheticResponse expected =
            generate_response(p.instance_id, s.tier, p.options_used, *profile, s.run);
        const OutcomeFlags f = expected_flags(expected.outcome);
        const BehaviorVerdict& v = verdicts[k].verdict;
        const bool match = f.hobsons_choice == v.is_hobsons_choice &&
                           f.conservative_bias == v.is_conservative_bias &&
                           f.hallucination == v.is_hallucination &&
                           f.new_relation == v.is_new_relation &&
                           f.dont_know == v.is_dont_know && f.noise == v.is_noise;
        mismatches += !match;
        json row = verdicts[k].context;
        row["instance_id"] = p.instance_id;
        row["tier"] = s.tier;
        row["outcome"] = std::string(to_string(expected.outcome));
        row["label"] = expected.label;
        row["matches_verdict"] = match;
        truth.push_back(std::move(row));
      }
      write_rows("ground_truth.jsonl", truth);
      stages.count("synthetic_mismatches", mismatches);
    }
    stages.finish();

    // ---- metrics
    stages.begin("metrics");
    std::map<CellKey, std::vector<BehaviorVerdict>> cells;
    std::vector<CellKey> cell_order;
    for (std::size_t k = 0; k < verdicts.size(); ++k) {
      const Slot& s = responses[k].slot;
      CellKey key{s.model, instances[s.instance].dataset, s.tier, s.temperature};
      auto [it, inserted] = cells.try_emplace(key);
      if (inserted) cell_order.push_back(key);
      it->second.push_back(verdicts[k].verdict);
    }
    ReportBundle bundle;
    for (const auto& key : cell_order) {
      const auto& [m, dataset, tier, t] = key;
      bundle.metrics.push_back(compute_rates(
          tally(cells.at(key)), tier,
          ReportKey{config.models[m], dataset, tier, config.temperatures[t]}));
    }
    stages.finish();

    // ---- agreement
    stages.begin("agreement");
    if (config.agreement && config.runs_per_setting >= 2) {
      std::map<CellKey, std::map<int, RunLabels>> runs;
      std::map<CellKey, std::vector<std::vector<std::string>>> observed;
      for (std::size_t k = 0; k < parsed.size(); ++k) {
        const Slot& s = responses[k].slot;
        const ParsedResponse& p = parsed[k].parsed;
        CellKey key{s.model, instances[s.instance].dataset, s.tier, s.temperature};
        runs[key][s.run];  // runs with nothing concluded still count as runs
        if (p.status != ParseStatus::Ok || !p.concluded_label) continue;
        runs[key][s.run][p.instance_id] = *p.concluded_label;
        auto& seqs = observed[key];
        if (seqs.size() <= static_cast<std::size_t>(s.run)) seqs.resize(s.run + 1);
        seqs[s.run].push_back(*p.concluded_label);
      }
      for (const auto& key : cell_order) {
        const auto& [m, dataset, tier, t] = key;
        const LabelEncoding encoding =
            canonical_label_encoding(registry_for(dataset).all_labels(), observed[key]);
        AgreementReport report = compute_agreement(
            ReportKey{config.models[m], dataset, tier, config.temperatures[t]}, runs[key],
            encoding);
        if (!report.per_pair.empty()) bundle.agreement.push_back(std::move(report));
      }
    }
    stages.count("reports", static_cast<std::int64_t>(bundle.agreement.size()));
    stages.finish();

    // ---- similarity
    stages.begin("similarity");
    const bool has_constrained = std::find(config.tiers.begin(), config.tiers.end(),
                                           PromptTier::Constrained) != config.tiers.end();
    if (config.similarity && has_constrained) {
      std::unique_ptr<SimilarityScorer> scorer;
      switch (config.scorer) {
        case ScorerKind::Lexical:
          scorer = std::make_unique<LexicalScorer>();
          break;
        case ScorerKind::Embedding:
          scorer = std::make_unique<EmbeddingScorer>(std::make_shared<EmbeddingClient>(
              config.embedding_endpoint, config.embedding_model));
          break;
        case ScorerKind::Judge: {
          std::shared_ptr<CompletionProvider> judge_provider;
          if (config.provider != ProviderMode::CacheOnly) {
            judge_provider = std::make_shared<ChatCompletionsProvider>(config.endpoint,
                                                                       config.system_prompt);
          }
          auto judge_gateway =
              std::make_shared<Gateway>(judge_provider, cache, cache_mode, config.retry);
          scorer = std::make_unique<JudgeScorer>(judge_gateway, config.judge_model,
                                                 config.judge_temperature);
          break;
        }
      }

      // (model, dataset, temperature, run, tier) -> outcomes in instance order
      using RunKey = std::tuple<std::size_t, std::string, std::size_t, int, PromptTier>;
      std::map<RunKey, std::vector<std::size_t>> by_run;
      for (std::size_t k = 0; k < responses.size(); ++k) {
        const Slot& s = responses[k].slot;
        by_run[{s.model, instances[s.instance].dataset, s.temperature, s.run, s.tier}]
            .push_back(k);
      }
      std::map<std::string, std::size_t> instance_index;
      for (std::size_t i = 0; i < instances.size(); ++i) instance_index[instances[i].id] = i;

      std::vector<PairRecord> pair_rows;
      std::vector<json> unmatched_rows;
      using SimKey = std::tuple<std::size_t, std::string, std::size_t, PromptTier>;
      std::map<SimKey, std::vector<SimilarityPair>> grouped;
      std::vector<SimKey> sim_order;
      for (const auto& [run_key, indices] : by_run) {
        const auto& [m, dataset, t, r, tier] = run_key;
        if (tier != PromptTier::Constrained) continue;
        std::vector<ConstrainedOutcome> constrained;
        for (std::size_t k : indices) constrained.push_back({verdicts[k].verdict, parsed[k].parsed});
        for (PromptTier target : config.tiers) {
          if (target == PromptTier::Constrained) continue;
          std::vector<ParsedResponse> other;
          auto it = by_run.find({m, dataset, t, r, target});
          if (it != by_run.end()) {
            for (std::size_t k : it->second) other.push_back(parsed[k].parsed);
          }
          CbJoin join = join_cb_pairs(constrained, other, target);
          const RecordContext ctx{config.models[m], dataset, config.temperatures[t], r};
          for (const auto& u : join.unmatched) {
            json row = ctx;
            row["instance_id"] = u.instance_id;
            row["target_tier"] = target;
            row["reason"] = u.reason;
            unmatched_rows.push_back(std::move(row));
          }
          SimKey sk{m, dataset, t, target};
          auto [git, inserted] = grouped.try_emplace(sk);
          if (inserted) sim_order.push_back(sk);
          for (auto& pair : join.pairs) {
            std::string context;
            if (config.similarity_with_context) {
              context = strip_markers(
                  mark_entities(instances[instance_index.at(pair.instance_id)]).text);
            }
            ScoreResult scored = scorer->score(pair.source_label, pair.target_label, context);
            pair.score = scored.score;
            if (!scored.score) pair.unscored_reason = scored.reason;
            git->second.push_back(pair);
            pair_rows.push_back({ctx, scorer->name(), std::move(pair)});
          }
        }
      }
      write_rows("similarity_pairs.jsonl", pair_rows);
      write_rows("similarity_unmatched.jsonl", unmatched_rows);
      for (const auto& sk : sim_order) {
        const auto& [m, dataset, t, target] = sk;
        const auto& pairs = grouped.at(sk);
        if (pairs.empty()) continue;
        bundle.similarity.push_back(summarize(
            pairs, config.similarity_threshold,
            SimilarityKey{config.models[m], dataset, scorer->name(), config.temperatures[t],
                          target}));
      }
      stages.count("pairs", static_cast<std::int64_t>(pair_rows.size()));
      stages.count("unmatched", static_cast<std::int64_t>(unmatched_rows.size()));
    }
    stages.finish();

    // ---- report
    stages.begin("report");
    sort_reports(bundle);
    auto write_json = [&](const std::string& rel, const json& doc, std::size_t rows) {
      stages.artifact(rel, rows, write_file(out / rel, doc.dump(2) + "\n"));
    };
    write_json("metrics.json", bundle.metrics, bundle.metrics.size());
    write_json("agreement.json", bundle.agreement, bundle.agreement.size());
    write_json("similarity.json", bundle.similarity, bundle.similarity.size());
    for (ReportFormat format : {ReportFormat::Markdown, ReportFormat::Json, ReportFormat::Csv}) {
      for (const auto& path : emit_report(bundle, format, out)) {
        stages.artifact(path.filename().string(), 0, sha256_hex(read_file(path)));
      }
    }
    stages.finish();

    manifest.status = "complete";
  } catch (const std::exception& e) {
    manifest.status = "failed";
    manifest.failed_stage = stages.current_name();
    manifest.error = e.what();
  }
  if (gateway) manifest.provider_stats = gateway->stats();
  manifest.wall_ms = elapsed_since(t0);
  stages.flush();
  return manifest;
}

ReportBundle load_report_bundle(const fs::path& output_dir) {
  ReportBundle bundle;
  auto load = [&](const char* name, auto& target) {
    const fs::path path = output_dir / name;
    if (!fs::exists(path)) return;
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      throw InputError("malformed report file: " + path.string());
    }
    doc.get_to(target);
  };
  load("metrics.json", bundle.metrics);
  load("agreement.json", bundle.agreement);
  load("similarity.json", bundle.similarity);
  if (bundle.empty()) throw InputError("no reports found in " + output_dir.string());
  return bundle;
}

}  // namespace hobson
