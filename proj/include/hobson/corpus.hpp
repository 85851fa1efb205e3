#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hobson {

// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool overlaps(const TokenSpan& other) const {
    return begin < other.end && other.begin < end;
  }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct RelationInstance {
  std::string id;
  std::vector<std::string> tokens;
  TokenSpan subj;
  TokenSpan obj;
  std::string subj_type;
  std::string obj_type;
  std::string gold_relation;  // canonical
  std::string dataset;
  std::string split;
};

struct EntityPair {
  std::string subj_type;
  std::string obj_type;

  // "SUBJTYPE:OBJTYPE", the registry key form.
  std::string key() const { return subj_type + ":" + obj_type; }
  friend bool operator==(const EntityPair&, const EntityPair&) = default;
};

struct OptionSet {
  EntityPair entity_pair;
  // Canonical labels in registry order; never contains no_relation.
  std::vector<std::string> relations;
  // The registry entry named no_relation explicitly. no_relation stays an
  // admissible conclusion for constrained and semi-constrained prompts either
  // way.
  bool includes_no_relation = false;

  bool contains(std::string_view label) const;
};

struct HighlightedText {
  std::string text;
  std::string subject_surface;
  std::string object_surface;
};

enum class DatasetFormat { TacredJson, RefindJson, GenericJsonl };

DatasetFormat parse_dataset_format(std::string_view tag);
std::string_view to_string(DatasetFormat format);

struct RejectedRecord {
  std::string raw_record;
  std::string reason;
};

struct LoadResult {
  std::vector<RelationInstance> instances;
  std::vector<RejectedRecord> rejects;
};

struct LoadOptions {
  // Overrides the dataset tag implied by the format ("tacred", "refind",
  // or the record's own "dataset" field for generic-jsonl).
  std::optional<std::string> dataset;
  std::string split = "unspecified";
};

/// Reads a relation-extraction dataset.
///
/// tacred-json and refind-json are JSON arrays in the TACRED layout
/// (`token`, inclusive `*_end`); refind-json also accepts REFinD's
/// `e1_*`/`e2_*` field names. generic-jsonl is one object per line with
/// `tokens` and exclusive end indices.
///
/// Every record ends up either in `instances` or in `rejects` with a
/// reason. Throws InputError when the file cannot be read or when no record
/// survives validation.
LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                        const LoadOptions& options = {});

// Writes the rejects sidecar (JSONL of {raw_record, reason}).
void write_rejects(const std::filesystem::path& path,
                   const std::vector<RejectedRecord>& rejects);

/// Keeps the instances whose gold relation is the canonical no_relation,
/// in input order.
std::vector<RelationInstance> filter_no_relation(
    const std::vector<RelationInstance>& instances);

/// Entity-pair -> candidate relations, in document order, plus an optional
/// fallback list used for pairs the document does not cover (key "*").
class OptionRegistry {
 public:
  OptionRegistry() = default;

  static OptionRegistry from_json(const nlohmann::ordered_json& doc);
  static OptionRegistry from_file(const std::filesystem::path& path);
  // Built-in defaults: "refind" or "tacred".
  static OptionRegistry builtin(std::string_view dataset);

  void add(EntityPair pair, const std::vector<std::string>& raw_labels);
  void set_fallback(const std::vector<std::string>& raw_labels);

  /// Throws ContractError("uncovered entity pair (S, O)") when the pair is
  /// absent and no fallback is configured.
  OptionSet lookup(const EntityPair& pair) const;

  // Every distinct label in registry order, entries first then fallback.
  std::vector<std::string> all_labels() const;
  bool has_fallback() const { return fallback_.has_value(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    EntityPair pair;
    std::vector<std::string> relations;
    bool includes_no_relation = false;
  };
  static Entry make_entry(EntityPair pair,
                          const std::vector<std::string>& raw_labels);

  std::vector<Entry> entries_;
  std::optional<Entry> fallback_;
};

OptionSet option_set_for(const RelationInstance& instance,
                         const OptionRegistry& registry);

// Tokens joined by single spaces.
std::string detokenize(const std::vector<std::string>& tokens);
std::string detokenize(const std::vector<std::string>& tokens, TokenSpan span);

/// Wraps the subject and object spans in [SUBJ]...[/SUBJ] and
/// [OBJ]...[/OBJ]. Throws ContractError on empty, out-of-range or
/// overlapping spans.
HighlightedText mark_entities(const RelationInstance& instance);

// Inverse of mark_entities on its text: drops the four markers and the
// single spaces mark_entities inserted next to them.
std::string strip_markers(std::string_view highlighted);

}  // namespace hobson
