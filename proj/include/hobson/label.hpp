#pragma once

#include <string>
#include <string_view>

namespace hobson {

inline constexpr std::string_view kNoRelation = "no_relation";
inline constexpr std::string_view kDontKnow = "dont_know";

/// Folds a free-form relation label into canonical form: lowercase,
/// surrounding quotes and punctuation removed, whitespace, slashes and
/// hyphens collapsed to single underscores, and the alias table applied
/// ("No/Other Relation" -> "no_relation", "don't know" -> "dont_know").
///
/// Throws ContractError("unnormalizable label") when nothing is left.
/// Idempotent on its own output.
std::string normalize_label(std::string_view raw);

/// True when `label` already has canonical shape: snake_case segments of
/// [a-z0-9_] separated by ':' namespace delimiters.
bool is_canonical_label(std::string_view label);

inline bool is_reserved_label(std::string_view label) {
  return label == kNoRelation || label == kDontKnow;
}

}  // namespace hobson
