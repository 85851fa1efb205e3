#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "hobson/error.hpp"
#include "hobson/label.hpp"
#include "hobson/metrics.hpp"
#include "hobson/pipeline.hpp"
#include "hobson/recovery.hpp"
#include "hobson/report.hpp"
#include "hobson/serialization.hpp"
#include "hobson/similarity.hpp"
#include "hobson/synth.hpp"

namespace {

using namespace hobson;
using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

struct RunFlags {
  std::string config;
  std::string dataset, format, dataset_tag, split, registry;
  bool all_relations = false;
  std::size_t count_subset = 0;
  std::string tiers, models, temperatures;
  int runs = 0;
  bool no_agreement = false, replication_profile = false;
  std::string provider, profile;
  std::uint64_t seed = 0;
  std::string base_url, path_prefix, api_key_env, system_prompt;
  int timeout = 0, max_tokens = 0, max_attempts = 0;
  std::size_t parallelism = 0;
  std::string output_dir, cache_dir, templates_dir;
  bool list_no_relation = false, count_suboptimal_cb = false;
  bool no_similarity = false, with_context = false;
  std::string scorer, judge_model, embedding_base_url, embedding_model;
  double threshold = 0, judge_temperature = 0;
};

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "JSON run config; flags below override it");
  cmd->add_option("--dataset", f.dataset, "Dataset file");
  cmd->add_option("--format", f.format, "tacred-json | refind-json | generic-jsonl");
  cmd->add_option("--dataset-tag", f.dataset_tag, "Dataset tag (picks the built-in registry)");
  cmd->add_option("--split", f.split, "Split name recorded on instances");
  cmd->add_option("--registry", f.registry, "Option registry JSON");
  cmd->add_flag("--all-relations", f.all_relations, "Keep instances of every gold relation");
  cmd->add_option("--count-subset", f.count_subset, "Use the first N selected instances");
  cmd->add_option("--tiers", f.tiers, "Comma list: constrained,semi_constrained,open_ended");
  cmd->add_option("--models", f.models, "Comma list of model names");
  cmd->add_option("--temperatures", f.temperatures, "Comma list, e.g. 0.2,0.5");
  cmd->add_option("--runs", f.runs, "Runs per model and temperature");
  cmd->add_flag("--no-agreement", f.no_agreement, "Skip kappa/rho");
  cmd->add_flag("--replication-profile", f.replication_profile,
                "Only allow temperatures 0.2 and 0.5");
  cmd->add_option("--provider", f.provider, "synthetic | live | cache_only");
  cmd->add_option("--profile", f.profile, "Synthetic annotator profile JSON");
  cmd->add_option("--seed", f.seed, "Override the profile seed");
  cmd->add_option("--base-url", f.base_url, "Chat-completions server, e.g. https://api.example.com");
  cmd->add_option("--path-prefix", f.path_prefix, "API path prefix (default /v1)");
  cmd->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key");
  cmd->add_option("--timeout", f.timeout, "Request timeout in seconds");
  cmd->add_option("--system-prompt", f.system_prompt, "Optional system message");
  cmd->add_option("--max-tokens", f.max_tokens, "Completion token limit");
  cmd->add_option("--parallelism", f.parallelism, "Concurrent provider requests");
  cmd->add_option("--max-attempts", f.max_attempts, "Attempts per request, retries included");
  cmd->add_option("--output-dir", f.output_dir, "Where artifacts are written");
  cmd->add_option("--cache-dir", f.cache_dir, "Response cache (default <output-dir>/cache)");
  cmd->add_option("--templates-dir", f.templates_dir, "Directory with <tier>.txt templates");
  cmd->add_flag("--list-no-relation", f.list_no_relation, "Also list no_relation among the options");
  cmd->add_flag("--count-suboptimal-cb", f.count_suboptimal_cb,
                "Count in-list conclusions with a better novel suggestion as CB");
  cmd->add_flag("--no-similarity", f.no_similarity, "Skip the similarity analysis");
  cmd->add_option("--scorer", f.scorer, "lexical | embedding | judge");
  cmd->add_option("--threshold", f.threshold, "Similarity threshold (default 0.7)");
  cmd->add_flag("--with-context", f.with_context, "Give the scorer the instance sentence");
  cmd->add_option("--judge-model", f.judge_model, "Model for the judge scorer");
  cmd->add_option("--judge-temperature", f.judge_temperature, "Judge sampling temperature");
  cmd->add_option("--embedding-base-url", f.embedding_base_url, "Embeddings server");
  cmd->add_option("--embedding-model", f.embedding_model, "Embedding model name");
}

RunConfig build_config(CLI::App* cmd, const RunFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : RunConfig::from_file(f.config);
  auto set = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
  if (set("--dataset")) c.dataset_path = f.dataset;
  if (set("--format")) c.dataset_format = parse_dataset_format(f.format);
  if (set("--dataset-tag")) c.dataset_tag = f.dataset_tag;
  if (set("--split")) c.split = f.split;
  if (set("--registry")) c.registry_path = f.registry;
  if (f.all_relations) c.only_no_relation = false;
  if (set("--count-subset")) c.count_subset = f.count_subset;
  if (set("--tiers")) {
    c.tiers.clear();
    for (const auto& t : split_list(f.tiers)) c.tiers.push_back(parse_tier(t));
  }
  if (set("--models")) c.models = split_list(f.models);
  if (set("--temperatures")) {
    c.temperatures.clear();
    for (const auto& t : split_list(f.temperatures)) c.temperatures.push_back(std::stod(t));
  }
  if (set("--runs")) c.runs_per_setting = f.runs;
  if (f.no_agreement) c.agreement = false;
  if (f.replication_profile) c.replication_profile = true;
  if (set("--provider")) c.provider = parse_provider_mode(f.provider);
  if (set("--profile")) c.profile_path = f.profile;
  if (set("--seed")) c.seed = f.seed;
  if (set("--base-url")) c.endpoint.base_url = f.base_url;
  if (set("--path-prefix")) c.endpoint.path_prefix = f.path_prefix;
  if (set("--api-key-env")) {
    c.endpoint.api_key_env = f.api_key_env;
    c.embedding_endpoint.api_key_env = f.api_key_env;
  }
  if (set("--timeout")) c.endpoint.timeout_seconds = f.timeout;
  if (set("--system-prompt")) c.system_prompt = f.system_prompt;
  if (set("--max-tokens")) c.max_tokens = f.max_tokens;
  if (set("--parallelism")) c.parallelism = f.parallelism;
  if (set("--max-attempts")) c.retry.max_attempts = f.max_attempts;
  if (set("--output-dir")) c.output_dir = f.output_dir;
  if (set("--cache-dir")) c.cache_dir = f.cache_dir;
  if (set("--templates-dir")) c.templates_dir = f.templates_dir;
  if (f.list_no_relation) c.render.list_no_relation_in_options = true;
  if (f.count_suboptimal_cb) c.classifier.count_suboptimal_cb = true;
  if (f.no_similarity) c.similarity = false;
  if (set("--scorer")) c.scorer = parse_scorer_kind(f.scorer);
  if (set("--threshold")) c.similarity_threshold = f.threshold;
  if (f.with_context) c.similarity_with_context = true;
  if (set("--judge-model")) c.judge_model = f.judge_model;
  if (set("--judge-temperature")) c.judge_temperature = f.judge_temperature;
  if (set("--embedding-base-url")) c.embedding_endpoint.base_url = f.embedding_base_url;
  if (set("--embedding-model")) c.embedding_model = f.embedding_model;
  return c;
}

int cmd_run(CLI::App* cmd, const RunFlags& flags) {
  const RunConfig config = build_config(cmd, flags);
  const RunManifest manifest = run(config);
  for (const auto& stage : manifest.stages) {
    std::cout << "  " << stage.name << ": done";
    for (const auto& [key, value] : stage.counts) std::cout << ", " << key << "=" << value;
    std::cout << "\n";
  }
  std::cout << "provider calls " << manifest.provider_stats.provider_calls << ", cache hits "
            << manifest.provider_stats.cache_hits << ", retries "
            << manifest.provider_stats.retries << "\n";
  if (!manifest.ok()) {
    std::cerr << "run failed at stage " << manifest.failed_stage << ": " << manifest.error
              << "\n";
    return kExitFailure;
  }
  std::cout << "report: " << (config.output_dir / "report.md").string() << "\n";
  return 0;
}

int cmd_report(const std::string& input, const std::string& format, std::string output) {
  const ReportBundle bundle = load_report_bundle(input);
  if (output.empty()) output = input;
  for (const auto& path : emit_report(bundle, parse_report_format(format), output)) {
    std::cout << path.string() << "\n";
  }
  return 0;
}

struct SimilarityFlags {
  std::string pairs, output, rescore, base_url, judge_model, embedding_model;
  std::string api_key_env = "HOBSON_API_KEY";
  double threshold = kDefaultSimilarityThreshold;
};

int cmd_similarity(const SimilarityFlags& f) {
  auto records = read_jsonl_as<PairRecord>(f.pairs);
  std::unique_ptr<SimilarityScorer> scorer;
  if (f.rescore == "lexical") {
    scorer = std::make_unique<LexicalScorer>();
  } else if (f.rescore == "embedding" || f.rescore == "judge") {
    HttpEndpoint endpoint;
    endpoint.base_url = f.base_url;
    endpoint.api_key_env = f.api_key_env;
    if (f.rescore == "embedding") {
      scorer = std::make_unique<EmbeddingScorer>(
          std::make_shared<EmbeddingClient>(endpoint, f.embedding_model));
    } else {
      auto gateway = std::make_shared<Gateway>(
          std::make_shared<ChatCompletionsProvider>(endpoint), nullptr, CacheMode::Disabled);
      scorer = std::make_unique<JudgeScorer>(gateway, f.judge_model);
    }
  } else if (!f.rescore.empty()) {
    throw ContractError("unknown scorer: " + f.rescore);
  }

  using Key = std::tuple<std::string, std::string, std::string, double, PromptTier>;
  std::map<Key, std::vector<SimilarityPair>> groups;
  std::vector<Key> order;
  for (auto& r : records) {
    if (scorer) {
      const ScoreResult s = scorer->score(r.pair.source_label, r.pair.target_label, "");
      r.pair.score = s.score;
      r.pair.unscored_reason = s.reason;
      r.scorer = scorer->name();
    }
    Key key{r.context.model, r.context.dataset, r.scorer, r.context.temperature,
            r.pair.target_tier};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.pair);
  }
  ReportBundle bundle;
  for (const auto& key : order) {
    const auto& [model, dataset, scorer_name, t, tier] = key;
    bundle.similarity.push_back(
        summarize(groups.at(key), f.threshold, SimilarityKey{model, dataset, scorer_name, t, tier}));
  }
  sort_reports(bundle);
  std::cout << render_markdown(bundle);
  if (!f.output.empty()) {
    write_file(f.output, json(bundle.similarity).dump(2) + "\n");
  }
  return 0;
}

int cmd_agree(const std::string& parsed_path, const std::string& registry_path,
              const std::string& output) {
  const auto records = read_jsonl_as<ParsedRecord>(parsed_path);
  using Key = std::tuple<std::string, std::string, PromptTier, double>;
  std::map<Key, std::map<int, RunLabels>> runs;
  std::map<Key, std::vector<std::vector<std::string>>> observed;
  std::vector<Key> order;
  for (const auto& r : records) {
    Key key{r.context.model, r.context.dataset, r.parsed.tier, r.context.temperature};
    if (!runs.count(key)) order.push_back(key);
    runs[key][r.context.run_index];
    if (r.parsed.status != ParseStatus::Ok || !r.parsed.concluded_label) continue;
    runs[key][r.context.run_index][r.parsed.instance_id] = *r.parsed.concluded_label;
    auto& seqs = observed[key];
    if (seqs.size() <= static_cast<std::size_t>(r.context.run_index)) {
      seqs.resize(r.context.run_index + 1);
    }
    seqs[r.context.run_index].push_back(*r.parsed.concluded_label);
  }
  ReportBundle bundle;
  for (const auto& key : order) {
    const auto& [model, dataset, tier, t] = key;
    const OptionRegistry registry = registry_path.empty() ? OptionRegistry::builtin(dataset)
                                                          : OptionRegistry::from_file(registry_path);
    const LabelEncoding encoding = canonical_label_encoding(registry.all_labels(), observed[key]);
    AgreementReport report = compute_agreement(ReportKey{model, dataset, tier, t}, runs[key], encoding);
    if (!report.per_pair.empty()) bundle.agreement.push_back(std::move(report));
  }
  sort_reports(bundle);
  std::cout << render_markdown(bundle);
  if (!output.empty()) write_file(output, json(bundle.agreement).dump(2) + "\n");
  return 0;
}

struct SynthFlags {
  std::string profile, tier, options, registry;
  std::int64_t n = 2000;
  std::uint64_t seed = 0;
};

int cmd_synth_validate(CLI::App* cmd, const SynthFlags& f) {
  AnnotatorProfile profile =
      f.profile.empty() ? AnnotatorProfile::builtin() : AnnotatorProfile::from_file(f.profile);
  if (cmd->get_option("--seed")->count() > 0) profile.seed = f.seed;
  std::vector<std::string> options;
  if (!f.options.empty()) {
    for (const auto& o : split_list(f.options)) options.push_back(normalize_label(o));
  } else {
    const OptionRegistry registry = f.registry.empty() ? OptionRegistry::builtin("refind")
                                                       : OptionRegistry::from_file(f.registry);
    options = registry.all_labels();
    profile.validate_against(registry);
  }
  std::vector<PromptTier> tiers;
  if (f.tier.empty()) {
    tiers.assign(kAllTiers.begin(), kAllTiers.end());
  } else {
    tiers.push_back(parse_tier(f.tier));
  }

  bool all_pass = true;
  for (PromptTier tier : tiers) {
    const RecoveryReport report = check_recovery(profile, tier, f.n, options);
    std::cout << to_string(tier) << " (n=" << report.n << ", seed=" << profile.seed
              << ", flag mismatches=" << report.flag_mismatches << ")\n";
    for (const auto& c : report.checks) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-5s observed %.4f expected %.4f 3sigma %.4f  %s\n",
                    c.name.c_str(), c.observed, c.expected, 3 * c.sigma,
                    c.pass() ? "ok" : "OUT OF BOUNDS");
      std::cout << line;
    }
    all_pass = all_pass && report.pass();
  }
  std::cout << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measures conservative bias and hallucination in LLM relation extraction."};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline");
  add_run_options(run_cmd, run_flags);

  std::string report_input, report_format = "markdown", report_output;
  auto* report_cmd = app.add_subcommand("report", "Re-emit reports from a finished run");
  report_cmd->add_option("--input", report_input, "Run output directory")->required();
  report_cmd->add_option("--format", report_format, "markdown | csv | json");
  report_cmd->add_option("--output", report_output, "Destination directory (default: input)");

  SimilarityFlags sim;
  auto* sim_cmd = app.add_subcommand("similarity", "Summarize (and optionally rescore) CB pairs");
  sim_cmd->add_option("--pairs", sim.pairs, "similarity_pairs.jsonl")->required();
  sim_cmd->add_option("--threshold", sim.threshold, "Strict threshold (default 0.7)");
  sim_cmd->add_option("--rescore", sim.rescore, "lexical | embedding | judge");
  sim_cmd->add_option("--base-url", sim.base_url, "Server for embedding/judge rescoring");
  sim_cmd->add_option("--api-key-env", sim.api_key_env, "Environment variable with the API key");
  sim_cmd->add_option("--judge-model", sim.judge_model, "Judge model");
  sim_cmd->add_option("--embedding-model", sim.embedding_model, "Embedding model");
  sim_cmd->add_option("--output", sim.output, "Write the summaries as JSON");

  std::string agree_parsed, agree_registry, agree_output;
  auto* agree_cmd = app.add_subcommand("agree", "Cohen's kappa and Spearman's rho across runs");
  agree_cmd->add_option("--parsed", agree_parsed, "parsed.jsonl from a run")->required();
  agree_cmd->add_option("--registry", agree_registry, "Registry for the label encoding");
  agree_cmd->add_option("--output", agree_output, "Write the reports as JSON");

  SynthFlags synth;
  auto* synth_cmd =
      app.add_subcommand("synth-validate", "Check that configured rates are recovered");
  synth_cmd->add_option("--profile", synth.profile, "Annotator profile JSON (default: built-in)");
  synth_cmd->add_option("--n", synth.n, "Replies per tier");
  synth_cmd->add_option("--tier", synth.tier, "Only this tier");
  synth_cmd->add_option("--seed", synth.seed, "Override the profile seed");
  synth_cmd->add_option("--options", synth.options, "Comma list of offered labels");
  synth_cmd->add_option("--registry", synth.registry, "Offer every label of this registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_cmd, run_flags);
    if (*report_cmd) return cmd_report(report_input, report_format, report_output);
    if (*sim_cmd) return cmd_similarity(sim);
    if (*agree_cmd) return cmd_agree(agree_parsed, agree_registry, agree_output);
    if (*synth_cmd) return cmd_synth_validate(synth_cmd, synth);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
