#include "hobson/label.hpp"

#include <array>
#include <string>
#include <utility>

#include "hobson/error.hpp"

namespace hobson {
namespace {

bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Keys are in collapsed form.
constexpr std::array<std::pair<std::string_view, std::string_view>, 11>
    kAliases = {{
        {"no_other_relation", kNoRelation},
        {"no_or_other_relation", kNoRelation},
        {"no_relations", kNoRelation},
        {"norelation", kNoRelation},
        {"none", kNoRelation},
        {"dont_know", kDontKnow},
        {"do_not_know", kDontKnow},
        {"i_dont_know", kDontKnow},
        {"dontknow", kDontKnow},
        {"unknown", kDontKnow},
        {"not_known", kDontKnow},
    }};

}  // namespace

std::string normalize_label(std::string_view raw) {
  std::size_t first = 0;
  std::size_t last = raw.size();
  while (first < last && !is_ascii_alnum(raw[first])) ++first;
  while (last > first && !is_ascii_alnum(raw[last - 1])) --last;

  std::string out;
  out.reserve(last - first);
  auto push_separator = [&out] {
    if (!out.empty() && out.back() != '_' && out.back() != ':') out += '_';
  };
  for (std::size_t i = first; i < last; ++i) {
    const char c = raw[i];
    if (is_ascii_alnum(c)) {
      out += ascii_lower(c);
    } else if (c == '_') {
      push_separator();
    } else if (c == ':') {
      while (!out.empty() && out.back() == '_') out.pop_back();
      if (!out.empty() && out.back() != ':') out += ':';
    } else if (c == '\'' || c == '"' || c == '`' ||
               static_cast<unsigned char>(c) >= 0x80) {
      // quotes and non-ASCII bytes (curly quotes) vanish: don't -> dont
    } else {
      push_separator();
    }
  }
  while (!out.empty() && (out.back() == '_' || out.back() == ':')) out.pop_back();
  std::size_t lead = 0;
  while (lead < out.size() && (out[lead] == '_' || out[lead] == ':')) ++lead;
  out.erase(0, lead);

  for (const auto& [alias, canonical] : kAliases) {
    if (out == alias) return std::string(canonical);
  }
  if (out.empty()) {
    throw ContractError("unnormalizable label: '" + std::string(raw) + "'");
  }
  return out;
}

bool is_canonical_label(std::string_view label) {
  if (label.empty()) return false;
  bool segment_empty = true;
  for (char c : label) {
    if (c == ':') {
      if (segment_empty) return false;
      segment_empty = true;
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_') {
      segment_empty = false;
    } else {
      return false;
    }
  }
  return !segment_empty;
}

}  // namespace hobson
