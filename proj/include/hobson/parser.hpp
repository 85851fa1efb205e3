#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hobson/corpus.hpp"
#include "hobson/gateway.hpp"
#include "hobson/prompt.hpp"

namespace hobson {

enum class ParseStatus { Ok, NoConclusion, Noise };

std::string_view to_string(ParseStatus status);
ParseStatus parse_status_from_string(std::string_view text);

struct ParsedResponse {
  std::string instance_id;
  PromptTier tier = PromptTier::Constrained;
  std::optional<std::string> concluded_label;
  // Labels named in the reasoning, first mention first, never the conclusion.
  std::vector<std::string> suggested_relations;
  std::string reasoning_text;
  ParseStatus status = ParseStatus::NoConclusion;
  std::string raw_digest;  // sha256 of the raw text
};

struct NoiseConfig {
  // Case-insensitive substrings marking meta-responses and template echoes.
  std::vector<std::string> patterns = {
      "please specify",       "please provide",
      "please clarify",       "title example",
      "as an ai",             "i'm sorry",
      "i am sorry",           "i cannot",
      "i can't",              "given the following sentence:",
      "positioned between the entity marker",
  };
};

struct ParserConfig {
  NoiseConfig noise;
  // Labels never reported as suggestions (template plumbing words).
  std::vector<std::string> ignored_labels = {
      "highlighted_text", "subject_surface", "object_surface",
      "relation_class",   "step_by_step",
  };
};

/// Reasoning-level relation candidates: snake_case and namespaced tokens
/// anywhere in the text, plus short phrases following cue phrases such as
/// "a more accurate relation like", "such as" and "a better option would
/// be". Canonicalized, deduplicated, first mention first. Reserved labels
/// are never suggestions. A bare suffix of a namespaced option ("founded_by"
/// for "org:founded_by") resolves to that option.
std::vector<std::string> extract_suggestions(std::string_view reasoning_text,
                                             const OptionSet& options,
                                             const ParserConfig& config = {});

/// True when the text is blank, or matches a noise pattern (or carries
/// unfilled template placeholders) and yields no conclusion.
bool detect_noise(std::string_view raw_text, const ParserConfig& config = {});

/// Splits a reply into conclusion and reasoning. The conclusion comes from
/// the last explicit "answer:"/"relation is"-style marker that is followed
/// by a label; failing that, from the last line that names one. Everything
/// before the conclusion region is reasoning.
ParsedResponse parse(std::string_view instance_id, std::string_view raw_text,
                     PromptTier tier, const OptionSet& options,
                     const ParserConfig& config = {});

inline ParsedResponse parse(const RawResponse& raw, PromptTier tier,
                            const OptionSet& options,
                            const ParserConfig& config = {}) {
  return parse(raw.instance_id, raw.text, tier, options, config);
}

}  // namespace hobson
