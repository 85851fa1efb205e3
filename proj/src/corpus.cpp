#include "hobson/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "hobson/assets.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

using nlohmann::json;

std::string upper(std::string s) {
  for (auto& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

// Thrown while mapping one record; turned into a reject entry.
struct RecordProblem {
  std::string reason;
};

struct FieldNames {
  const char* tokens;
  const char* subj_start;
  const char* subj_end;
  const char* obj_start;
  const char* obj_end;
  const char* subj_type;
  const char* obj_type;
  bool inclusive_end;
};

constexpr FieldNames kTacredFields{"token",    "subj_start", "subj_end",
                                   "obj_start", "obj_end",   "subj_type",
                                   "obj_type",  true};
constexpr FieldNames kRefindAltFields{"token",    "e1_start", "e1_end",
                                      "e2_start", "e2_end",   "e1_type",
                                      "e2_type",  true};
constexpr FieldNames kGenericFields{"tokens",    "subj_start", "subj_end",
                                    "obj_start", "obj_end",    "subj_type",
                                    "obj_type",  false};

const json& field(const json& record, const char* name) {
  auto it = record.find(name);
  if (it == record.end() || it->is_null()) {
    throw RecordProblem{std::string("missing field: ") + name};
  }
  return *it;
}

std::string string_field(const json& record, const char* name) {
  const json& v = field(record, name);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw RecordProblem{std::string("invalid field: ") + name};
}

long long index_field(const json& record, const char* name) {
  const json& v = field(record, name);
  if (!v.is_number_integer()) {
    throw RecordProblem{std::string("invalid field: ") + name};
  }
  return v.get<long long>();
}

TokenSpan span_from(const json& record, const char* start_name,
                    const char* end_name, bool inclusive_end,
                    std::size_t n_tokens) {
  const long long start = index_field(record, start_name);
  long long end = index_field(record, end_name);
  if (inclusive_end) ++end;
  if (start < 0 || end < 0) throw RecordProblem{"span out of bounds"};
  if (end <= start) throw RecordProblem{"empty span"};
  if (static_cast<std::size_t>(end) > n_tokens) {
    throw RecordProblem{"span out of bounds"};
  }
  return {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
}

RelationInstance map_record(const json& record, DatasetFormat format,
                            const LoadOptions& options) {
  if (!record.is_object()) throw RecordProblem{"record is not an object"};

  const FieldNames* names = &kGenericFields;
  if (format == DatasetFormat::TacredJson) names = &kTacredFields;
  if (format == DatasetFormat::RefindJson) {
    names = record.contains("e1_start") ? &kRefindAltFields : &kTacredFields;
  }

  RelationInstance inst;
  inst.id = string_field(record, "id");
  if (inst.id.empty()) throw RecordProblem{"missing field: id"};

  const json& tokens = field(record, names->tokens);
  if (!tokens.is_array() || tokens.empty()) {
    throw RecordProblem{std::string("invalid field: ") + names->tokens};
  }
  for (const auto& t : tokens) {
    if (!t.is_string()) {
      throw RecordProblem{std::string("invalid field: ") + names->tokens};
    }
    inst.tokens.push_back(t.get<std::string>());
  }

  inst.subj = span_from(record, names->subj_start, names->subj_end,
                        names->inclusive_end, inst.tokens.size());
  inst.obj = span_from(record, names->obj_start, names->obj_end,
                       names->inclusive_end, inst.tokens.size());
  if (inst.subj.overlaps(inst.obj)) throw RecordProblem{"overlapping spans"};

  inst.subj_type = upper(string_field(record, names->subj_type));
  inst.obj_type = upper(string_field(record, names->obj_type));

  const std::string relation = string_field(record, "relation");
  try {
    inst.gold_relation = normalize_label(relation);
  } catch (const ContractError&) {
    throw RecordProblem{"empty relation"};
  }

  switch (format) {
    case DatasetFormat::TacredJson:
      inst.dataset = "tacred";
      break;
    case DatasetFormat::RefindJson:
      inst.dataset = "refind";
      break;
    case DatasetFormat::GenericJsonl:
      inst.dataset = record.contains("dataset") && record["dataset"].is_string()
                         ? record["dataset"].get<std::string>()
                         : "generic";
      break;
  }
  if (options.dataset) inst.dataset = *options.dataset;
  inst.split = record.contains("split") && record["split"].is_string()
                   ? record["split"].get<std::string>()
                   : options.split;
  return inst;
}

}  // namespace

bool OptionSet::contains(std::string_view label) const {
  return std::find(relations.begin(), relations.end(), label) != relations.end();
}

DatasetFormat parse_dataset_format(std::string_view tag) {
  if (tag == "tacred-json") return DatasetFormat::TacredJson;
  if (tag == "refind-json") return DatasetFormat::RefindJson;
  if (tag == "generic-jsonl") return DatasetFormat::GenericJsonl;
  throw ContractError("unknown dataset format: " + std::string(tag));
}

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::TacredJson:
      return "tacred-json";
    case DatasetFormat::RefindJson:
      return "refind-json";
    case DatasetFormat::GenericJsonl:
      return "generic-jsonl";
  }
  return "generic-jsonl";
}

LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                        const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read dataset: " + path.string());

  LoadResult result;
  std::unordered_set<std::string> seen;
  auto accept = [&](const json& record, std::string raw) {
    try {
      RelationInstance inst = map_record(record, format, options);
      if (!seen.insert(inst.id).second) throw RecordProblem{"duplicate id"};
      result.instances.push_back(std::move(inst));
    } catch (const RecordProblem& p) {
      result.rejects.push_back({std::move(raw), p.reason});
    }
  };

  if (format == DatasetFormat::GenericJsonl) {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded()) {
        result.rejects.push_back({line, "malformed json"});
        continue;
      }
      accept(record, line);
    }
  } else {
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc = json::parse(buffer.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      throw InputError("dataset is not a JSON array: " + path.string());
    }
    for (const auto& record : doc) accept(record, record.dump());
  }

  if (result.instances.empty()) {
    throw InputError("no valid records in " + path.string() + " (" +
                     std::to_string(result.rejects.size()) + " rejected)");
  }
  return result;
}

void write_rejects(const std::filesystem::path& path,
                   const std::vector<RejectedRecord>& rejects) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write rejects file: " + path.string());
  for (const auto& r : rejects) {
    out << json{{"raw_record", r.raw_record}, {"reason", r.reason}}.dump()
        << '\n';
  }
}

std::vector<RelationInstance> filter_no_relation(
    const std::vector<RelationInstance>& instances) {
  std::vector<RelationInstance> out;
  for (const auto& inst : instances) {
    // Loaded instances are already canonical; normalizing again keeps this
    // correct for hand-built ones.
    if (!inst.gold_relation.empty() &&
        normalize_label(inst.gold_relation) == kNoRelation) {
      out.push_back(inst);
    }
  }
  return out;
}

OptionRegistry::Entry OptionRegistry::make_entry(
    EntityPair pair, const std::vector<std::string>& raw_labels) {
  Entry entry;
  entry.pair = {upper(std::move(pair.subj_type)), upper(std::move(pair.obj_type))};
  for (const auto& raw : raw_labels) {
    std::string label = normalize_label(raw);
    if (label == kNoRelation) {
      entry.includes_no_relation = true;
      continue;
    }
    if (std::find(entry.relations.begin(), entry.relations.end(), label) !=
        entry.relations.end()) {
      throw InputError("duplicate relation '" + label + "' for " +
                       entry.pair.key());
    }
    entry.relations.push_back(std::move(label));
  }
  return entry;
}

void OptionRegistry::add(EntityPair pair,
                         const std::vector<std::string>& raw_labels) {
  Entry entry = make_entry(std::move(pair), raw_labels);
  for (const auto& existing : entries_) {
    if (existing.pair == entry.pair) {
      throw InputError("entity pair listed twice: " + entry.pair.key());
    }
  }
  entries_.push_back(std::move(entry));
}

void OptionRegistry::set_fallback(const std::vector<std::string>& raw_labels) {
  fallback_ = make_entry({"*", "*"}, raw_labels);
}

OptionRegistry OptionRegistry::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw InputError("option registry must be an object");
  OptionRegistry registry;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_array()) {
      throw InputError("registry entry '" + key + "' must be a list");
    }
    std::vector<std::string> labels;
    for (const auto& v : value) {
      if (!v.is_string()) {
        throw InputError("registry entry '" + key + "' holds a non-string");
      }
      labels.push_back(v.get<std::string>());
    }
    if (key == "*") {
      registry.set_fallback(labels);
      continue;
    }
    const auto colon = key.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == key.size() ||
        key.find(':', colon + 1) != std::string::npos) {
      throw InputError("registry key must look like SUBJTYPE:OBJTYPE, got '" +
                       key + "'");
    }
    registry.add({key.substr(0, colon), key.substr(colon + 1)}, labels);
  }
  return registry;
}

OptionRegistry OptionRegistry::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read option registry: " + path.string());
  auto doc = nlohmann::ordered_json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw InputError("option registry is not valid JSON: " + path.string());
  }
  return from_json(doc);
}

OptionRegistry OptionRegistry::builtin(std::string_view dataset) {
  if (dataset == "refind") {
    return from_json(nlohmann::ordered_json::parse(assets::kRegistryRefind));
  }
  if (dataset == "tacred") {
    return from_json(nlohmann::ordered_json::parse(assets::kRegistryTacred));
  }
  throw ContractError("no built-in option registry for dataset '" +
                      std::string(dataset) + "'");
}

OptionSet OptionRegistry::lookup(const EntityPair& pair) const {
  const EntityPair wanted{upper(pair.subj_type), upper(pair.obj_type)};
  const Entry* hit = nullptr;
  for (const auto& entry : entries_) {
    if (entry.pair == wanted) {
      hit = &entry;
      break;
    }
  }
  if (hit == nullptr && fallback_) hit = &*fallback_;
  if (hit == nullptr) {
    throw ContractError("uncovered entity pair (" + wanted.subj_type + ", " +
                        wanted.obj_type + ")");
  }
  return OptionSet{wanted, hit->relations, hit->includes_no_relation};
}

std::vector<std::string> OptionRegistry::all_labels() const {
  std::vector<std::string> out;
  auto add_all = [&out](const Entry& e) {
    for (const auto& label : e.relations) {
      if (std::find(out.begin(), out.end(), label) == out.end()) {
        out.push_back(label);
      }
    }
  };
  for (const auto& e : entries_) add_all(e);
  if (fallback_) add_all(*fallback_);
  return out;
}

OptionSet option_set_for(const RelationInstance& instance,
                         const OptionRegistry& registry) {
  return registry.lookup({instance.subj_type, instance.obj_type});
}

std::string detokenize(const std::vector<std::string>& tokens) {
  return detokenize(tokens, {0, tokens.size()});
}

std::string detokenize(const std::vector<std::string>& tokens, TokenSpan span) {
  std::string out;
  for (std::size_t i = span.begin; i < span.end && i < tokens.size(); ++i) {
    if (i > span.begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

HighlightedText mark_entities(const RelationInstance& instance) {
  const std::size_t n = instance.tokens.size();
  for (const TokenSpan* span : {&instance.subj, &instance.obj}) {
    if (span->empty()) throw ContractError("empty entity span in " + instance.id);
    if (span->end > n) {
      throw ContractError("entity span out of bounds in " + instance.id);
    }
  }
  if (instance.subj.overlaps(instance.obj)) {
    throw ContractError("overlapping entity spans in " + instance.id);
  }

  std::vector<std::string_view> pieces;
  pieces.reserve(n + 4);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == instance.subj.begin) pieces.emplace_back("[SUBJ]");
    if (i == instance.obj.begin) pieces.emplace_back("[OBJ]");
    pieces.emplace_back(instance.tokens[i]);
    if (i + 1 == instance.subj.end) pieces.emplace_back("[/SUBJ]");
    if (i + 1 == instance.obj.end) pieces.emplace_back("[/OBJ]");
  }

  HighlightedText out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out.text += ' ';
    out.text += pieces[i];
  }
  out.subject_surface = detokenize(instance.tokens, instance.subj);
  out.object_surface = detokenize(instance.tokens, instance.obj);
  return out;
}

std::string strip_markers(std::string_view highlighted) {
  std::string out(highlighted);
  for (std::string_view marker : {"[SUBJ] ", " [/SUBJ]", "[OBJ] ", " [/OBJ]"}) {
    const auto pos = out.find(marker);
    if (pos != std::string::npos) out.erase(pos, marker.size());
  }
  return out;
}

}  // namespace hobson
