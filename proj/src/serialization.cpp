#include "hobson/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hobson/digest.hpp"
#include "hobson/error.hpp"

namespace hobson {
namespace {

using nlohmann::json;

json optional_percent(const std::optional<Percent>& p) {
  return p ? json(p->value()) : json(nullptr);
}

std::optional<Percent> percent_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return Percent::from_hundredths(std::llround(j[key].get<double>() * 100.0));
}

template <typename T>
json optional_value(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

void merge_context(json& j, const RecordContext& c) {
  j["model"] = c.model;
  j["dataset"] = c.dataset;
  j["temperature"] = c.temperature;
  j["run_index"] = c.run_index;
}

}  // namespace

void to_json(json& j, PromptTier tier) { j = std::string(to_string(tier)); }
void from_json(const json& j, PromptTier& tier) { tier = parse_tier(j.get<std::string>()); }

void to_json(json& j, const RelationInstance& v) {
  j = {{"id", v.id},
       {"tokens", v.tokens},
       {"subj_start", v.subj.begin},
       {"subj_end", v.subj.end},
       {"obj_start", v.obj.begin},
       {"obj_end", v.obj.end},
       {"subj_type", v.subj_type},
       {"obj_type", v.obj_type},
       {"relation", v.gold_relation},
       {"dataset", v.dataset},
       {"split", v.split}};
}

void to_json(json& j, const RecordContext& v) {
  j = json::object();
  merge_context(j, v);
}

void from_json(const json& j, RecordContext& v) {
  v.model = j.at("model").get<std::string>();
  v.dataset = j.at("dataset").get<std::string>();
  v.temperature = j.at("temperature").get<double>();
  v.run_index = j.at("run_index").get<int>();
}

void to_json(json& j, const ParsedResponse& v) {
  j = {{"instance_id", v.instance_id},
       {"tier", v.tier},
       {"concluded_label", optional_value(v.concluded_label)},
       {"suggested_relations", v.suggested_relations},
       {"reasoning_text", v.reasoning_text},
       {"status", std::string(to_string(v.status))},
       {"raw_digest", v.raw_digest}};
}

void from_json(const json& j, ParsedResponse& v) {
  v.instance_id = j.at("instance_id").get<std::string>();
  v.tier = j.at("tier").get<PromptTier>();
  v.concluded_label = optional_from<std::string>(j, "concluded_label");
  v.suggested_relations = j.value("suggested_relations", std::vector<std::string>{});
  v.reasoning_text = j.value("reasoning_text", "");
  v.status = parse_status_from_string(j.at("status").get<std::string>());
  v.raw_digest = j.value("raw_digest", "");
}

void to_json(json& j, const BehaviorVerdict& v) {
  j = {{"instance_id", v.instance_id},
       {"tier", v.tier},
       {"is_hobsons_choice", v.is_hobsons_choice},
       {"is_conservative_bias", v.is_conservative_bias},
       {"is_hallucination", v.is_hallucination},
       {"is_new_relation", v.is_new_relation},
       {"is_dont_know", v.is_dont_know},
       {"is_noise", v.is_noise},
       {"novel_suggestions", v.novel_suggestions},
       {"evidence", v.evidence}};
}

void from_json(const json& j, BehaviorVerdict& v) {
  v.instance_id = j.at("instance_id").get<std::string>();
  v.tier = j.at("tier").get<PromptTier>();
  v.is_hobsons_choice = j.value("is_hobsons_choice", false);
  v.is_conservative_bias = j.value("is_conservative_bias", false);
  v.is_hallucination = j.value("is_hallucination", false);
  v.is_new_relation = j.value("is_new_relation", false);
  v.is_dont_know = j.value("is_dont_know", false);
  v.is_noise = j.value("is_noise", false);
  v.novel_suggestions = j.value("novel_suggestions", std::vector<std::string>{});
  v.evidence = j.value("evidence", std::vector<std::string>{});
}

void to_json(json& j, const ParsedRecord& v) {
  j = v.parsed;
  merge_context(j, v.context);
}

void from_json(const json& j, ParsedRecord& v) {
  v.context = j.get<RecordContext>();
  v.parsed = j.get<ParsedResponse>();
}

void to_json(json& j, const VerdictRecord& v) {
  j = v.verdict;
  merge_context(j, v.context);
}

void from_json(const json& j, VerdictRecord& v) {
  v.context = j.get<RecordContext>();
  v.verdict = j.get<BehaviorVerdict>();
}

void to_json(json& j, const SimilarityPair& v) {
  j = {{"instance_id", v.instance_id},
       {"source_label", v.source_label},
       {"target_label", v.target_label},
       {"target_tier", v.target_tier},
       {"score", optional_value(v.score)}};
  if (!v.score) j["unscored_reason"] = v.unscored_reason;
}

void from_json(const json& j, SimilarityPair& v) {
  v.instance_id = j.at("instance_id").get<std::string>();
  v.source_label = j.at("source_label").get<std::string>();
  v.target_label = j.at("target_label").get<std::string>();
  v.target_tier = j.at("target_tier").get<PromptTier>();
  v.score = optional_from<double>(j, "score");
  v.unscored_reason = j.value("unscored_reason", "");
}

void to_json(json& j, const PairRecord& v) {
  j = v.pair;
  merge_context(j, v.context);
  j["scorer"] = v.scorer;
}

void from_json(const json& j, PairRecord& v) {
  v.context = j.get<RecordContext>();
  v.scorer = j.value("scorer", "");
  v.pair = j.get<SimilarityPair>();
}

void to_json(json& j, const MetricsCounts& v) {
  j = {{"n_total", v.n_total},   {"n_hc", v.n_hc},       {"n_cb", v.n_cb},
       {"n_h", v.n_h},           {"n_nr", v.n_nr},       {"n_noise", v.n_noise},
       {"n_dont_know", v.n_dont_know}};
}

void from_json(const json& j, MetricsCounts& v) {
  v.n_total = j.value("n_total", std::int64_t{0});
  v.n_hc = j.value("n_hc", std::int64_t{0});
  v.n_cb = j.value("n_cb", std::int64_t{0});
  v.n_h = j.value("n_h", std::int64_t{0});
  v.n_nr = j.value("n_nr", std::int64_t{0});
  v.n_noise = j.value("n_noise", std::int64_t{0});
  v.n_dont_know = j.value("n_dont_know", std::int64_t{0});
}

void to_json(json& j, const ReportKey& v) {
  j = {{"model", v.model},
       {"dataset", v.dataset},
       {"tier", v.tier},
       {"temperature", v.temperature}};
}

void from_json(const json& j, ReportKey& v) {
  v.model = j.at("model").get<std::string>();
  v.dataset = j.at("dataset").get<std::string>();
  v.tier = j.at("tier").get<PromptTier>();
  v.temperature = j.at("temperature").get<double>();
}

void to_json(json& j, const MetricsReport& v) {
  j = v.key;
  j["hcr"] = optional_percent(v.hcr);
  j["cbr"] = optional_percent(v.cbr);
  j["hr"] = optional_percent(v.hr);
  j["nrr"] = optional_percent(v.nrr);
  j["counts"] = v.counts;
  j["empty_cell"] = v.empty_cell;
}

void from_json(const json& j, MetricsReport& v) {
  v.key = j.get<ReportKey>();
  v.hcr = percent_from(j, "hcr");
  v.cbr = percent_from(j, "cbr");
  v.hr = percent_from(j, "hr");
  v.nrr = percent_from(j, "nrr");
  v.counts = j.at("counts").get<MetricsCounts>();
  v.empty_cell = j.value("empty_cell", false);
}

void to_json(json& j, const AgreementReport& v) {
  j = v.key;
  j["kappa_min"] = optional_value(v.kappa_min);
  j["kappa_max"] = optional_value(v.kappa_max);
  j["rho_min"] = optional_value(v.rho_min);
  j["rho_max"] = optional_value(v.rho_max);
  json pairs = json::array();
  for (const auto& p : v.per_pair) {
    pairs.push_back({{"run_a", p.run_a},
                     {"run_b", p.run_b},
                     {"n_items", p.n_items},
                     {"kappa", p.kappa},
                     {"rho", optional_value(p.rho)}});
  }
  j["per_pair"] = std::move(pairs);
}

void from_json(const json& j, AgreementReport& v) {
  v.key = j.get<ReportKey>();
  v.kappa_min = optional_from<double>(j, "kappa_min");
  v.kappa_max = optional_from<double>(j, "kappa_max");
  v.rho_min = optional_from<double>(j, "rho_min");
  v.rho_max = optional_from<double>(j, "rho_max");
  v.per_pair.clear();
  for (const auto& p : j.value("per_pair", json::array())) {
    RunPairAgreement pair;
    pair.run_a = p.at("run_a").get<int>();
    pair.run_b = p.at("run_b").get<int>();
    pair.n_items = p.at("n_items").get<std::size_t>();
    pair.kappa = p.at("kappa").get<double>();
    pair.rho = optional_from<double>(p, "rho");
    v.per_pair.push_back(pair);
  }
}

void to_json(json& j, const SimilarityKey& v) {
  j = {{"model", v.model},
       {"dataset", v.dataset},
       {"scorer", v.scorer},
       {"constrained_temperature", v.constrained_temperature},
       {"target_tier", v.target_tier}};
}

void from_json(const json& j, SimilarityKey& v) {
  v.model = j.at("model").get<std::string>();
  v.dataset = j.at("dataset").get<std::string>();
  v.scorer = j.at("scorer").get<std::string>();
  v.constrained_temperature = j.at("constrained_temperature").get<double>();
  v.target_tier = j.at("target_tier").get<PromptTier>();
}

void to_json(json& j, const SimilarityReport& v) {
  j = v.key;
  j["threshold"] = v.threshold;
  j["n_pairs"] = v.n_pairs;
  j["n_unscored"] = v.n_unscored;
  j["fraction_above_threshold"] = optional_value(v.fraction_above_threshold);
  j["mean"] = optional_value(v.mean);
  j["std_dev"] = optional_value(v.std_dev);
}

void from_json(const json& j, SimilarityReport& v) {
  v.key = j.get<SimilarityKey>();
  v.threshold = j.at("threshold").get<double>();
  v.n_pairs = j.at("n_pairs").get<std::size_t>();
  v.n_unscored = j.value("n_unscored", std::size_t{0});
  v.fraction_above_threshold = optional_from<double>(j, "fraction_above_threshold");
  v.mean = optional_from<double>(j, "mean");
  v.std_dev = optional_from<double>(j, "std_dev");
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed json");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw Error("cannot write " + path.string());
  return sha256_hex(content);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace hobson
