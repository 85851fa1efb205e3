#include "hobson/parser.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "hobson/digest.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}
bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_word(char c) { return is_alnum(c) || c == '_'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Phrases that only occur when a reply restates the prompt's instructions.
constexpr std::array<std::string_view, 7> kInstructionCues = {
    "if you do not know",
    "if there is no relation between the marked entities",
    "choose the appropriate relation class from the following",
    "here are the relation options again",
    "return the appropriate relation you selected from the relation class",
    "if the relation class is not part of the listed options",
    "return the appropriate relation you can suggest",
};

// Words that disqualify an unquoted, non-snake_case phrase from being a
// label ("not listed", "the subject", "about ownership").
const std::unordered_set<std::string_view>& plain_stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "the",      "a",         "an",        "this",        "that",
      "these",    "those",     "it",        "its",         "is",
      "are",      "was",       "were",      "be",          "been",
      "not",      "no",        "none",      "any",         "some",
      "one",      "option",    "options",   "relation",    "relations",
      "listed",   "provided",  "above",     "following",   "unclear",
      "there",    "between",   "based",     "given",       "because",
      "since",    "i",         "we",        "you",         "please",
      "here",     "also",      "more",      "most",        "better",
      "best",     "appropriate", "accurate", "suitable",   "preferable",
      "available", "would",    "could",     "should",      "might",
      "may",      "can",       "entity",    "entities",    "subject",
      "object",   "sentence",  "list",      "about",       "step",
      "let's",    "lets",      "however",   "therefore",   "so",
      "specify",  "clarify",   "example",   "sorry",       "which",
      "what",     "how",       "why",       "if",          "then",
      "they",     "he",        "she",       "them",        "does",
      "do",       "did",       "has",       "have",        "had",
  };
  return words;
}

// Words that end a cue-phrase capture ("owner of or shareholder of").
const std::unordered_set<std::string_view>& span_terminators() {
  static const std::unordered_set<std::string_view> words = {
      "or",    "and",   "would", "which", "might", "could", "is",  "are",
      "but",   "if",    "as",    "since", "because", "that", "in", "for",
      "with",  "when",  "than",  "though", "although", "was", "were", "be",
  };
  return words;
}

struct Hit {
  std::size_t begin = 0;
  std::string label;
};

// ---------------------------------------------------------------------------
// Scrubbing

// Sentences that restate the prompt (unfilled placeholders or instruction
// cues) are blanked with spaces so offsets stay aligned with the input.
std::string scrub_instruction_echoes(std::string_view text) {
  std::string out(text);
  const std::string lower = lowercase(text);
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const std::string_view sentence(lower.data() + start, end - start);
    bool echo = has_placeholder(sentence);
    for (auto cue : kInstructionCues) {
      if (echo) break;
      echo = sentence.find(cue) != std::string_view::npos;
    }
    if (echo) {
      for (std::size_t k = start; k < end; ++k) {
        if (out[k] != '\n') out[k] = ' ';
      }
    }
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool at_end = i + 1 == text.size();
    if (c == '\n') {
      flush(i + 1);
    } else if ((c == '.' || c == '!' || c == '?') &&
               (at_end || is_space(text[i + 1]))) {
      flush(i + 1);
    }
  }
  if (start < text.size()) flush(text.size());
  return out;
}

// ---------------------------------------------------------------------------
// Label candidates

bool is_token_char(char c) {
  return is_word(c) || c == ':' || c == '/' || c == '-';
}

// snake_case or namespaced tokens ("owner_of", "org:founded_by").
std::vector<Hit> find_label_tokens(std::string_view original) {
  // URLs are blanked so their path pieces do not read as labels.
  std::string masked(original);
  for (auto pos = masked.find("://"); pos != std::string::npos;
       pos = masked.find("://", pos)) {
    std::size_t b = pos;
    while (b > 0 && !is_space(masked[b - 1])) --b;
    std::size_t e = pos;
    while (e < masked.size() && !is_space(masked[e])) ++e;
    std::fill(masked.begin() + static_cast<std::ptrdiff_t>(b),
              masked.begin() + static_cast<std::ptrdiff_t>(e), ' ');
    pos = e;
  }
  const std::string_view text = masked;
  std::vector<Hit> hits;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word(text[i]) || (i > 0 && is_token_char(text[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_token_char(text[j])) ++j;
    std::size_t end = j;
    while (end > i && !is_alnum(text[end - 1])) --end;
    const std::string_view token = text.substr(i, end - i);
    i = j;

    if (token.find(":/") != std::string_view::npos) continue;  // URL
    const bool has_underscore = token.find('_') != std::string_view::npos;
    bool has_namespace = false;
    for (std::size_t k = 1; k + 1 < token.size(); ++k) {
      if (token[k] == ':' && is_alpha(token[k - 1]) && is_alpha(token[k + 1])) {
        has_namespace = true;
      }
    }
    if (!has_underscore && !has_namespace) continue;
    if (std::none_of(token.begin(), token.end(), is_alpha)) continue;
    hits.push_back({static_cast<std::size_t>(token.data() - text.data()),
                    normalize_label(token)});
  }
  return hits;
}

bool is_open_quote(std::string_view text, std::size_t i, std::size_t* width,
                   std::string_view* closer) {
  static constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";
  static constexpr std::string_view kRightDouble = "\xE2\x80\x9D";
  static constexpr std::string_view kLeftSingle = "\xE2\x80\x98";
  static constexpr std::string_view kRightSingle = "\xE2\x80\x99";
  if (i > 0 && is_alnum(text[i - 1])) return false;
  const char c = text[i];
  if (c == '\'' || c == '"' || c == '`') {
    *width = 1;
    *closer = text.substr(i, 1);
    return true;
  }
  if (text.substr(i, 3) == kLeftDouble) {
    *width = 3;
    *closer = kRightDouble;
    return true;
  }
  if (text.substr(i, 3) == kLeftSingle) {
    *width = 3;
    *closer = kRightSingle;
    return true;
  }
  return false;
}

struct Quoted {
  std::size_t begin = 0;  // of the content
  std::string_view content;
  std::size_t end = 0;  // past the closing quote
};

// A quoted span opening exactly at `i`, on one line, at most 60 bytes.
std::optional<Quoted> quoted_at(std::string_view text, std::size_t i) {
  std::size_t width = 0;
  std::string_view closer;
  if (!is_open_quote(text, i, &width, &closer)) return std::nullopt;
  const std::size_t content_begin = i + width;
  std::size_t k = content_begin;
  while (k < text.size() && k - content_begin <= 60 && text[k] != '\n') {
    if (text.substr(k, closer.size()) == closer) {
      const std::size_t after = k + closer.size();
      const bool closes = after >= text.size() || !is_alnum(text[after]);
      if (closes && k > content_begin) {
        return Quoted{content_begin, text.substr(content_begin, k - content_begin),
                      after};
      }
    }
    ++k;
  }
  return std::nullopt;
}

std::vector<Quoted> find_quoted(std::string_view text) {
  std::vector<Quoted> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (auto q = quoted_at(text, i)) {
      out.push_back(*q);
      i = q->end;
    } else {
      ++i;
    }
  }
  return out;
}

std::optional<std::string> try_normalize(std::string_view raw) {
  try {
    std::string label = normalize_label(raw);
    if (!is_canonical_label(label)) return std::nullopt;
    return label;
  } catch (const ContractError&) {
    return std::nullopt;
  }
}

std::optional<std::string> reserved_alias(std::string_view raw) {
  auto label = try_normalize(raw);
  if (label && is_reserved_label(*label)) return label;
  return std::nullopt;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

// An unquoted phrase of 1-4 plain words that reads like a label.
std::optional<std::string> plain_label(std::string_view phrase) {
  phrase = trim(phrase);
  if (auto alias = reserved_alias(phrase)) return alias;
  const auto words = split_words(phrase);
  if (words.empty() || words.size() > 4) return std::nullopt;
  for (auto w : words) {
    const std::string lw = lowercase(w);
    std::string bare;
    for (char c : lw) {
      if (is_alnum(c) || c == '\'') bare += c;
    }
    if (bare.empty() || plain_stopwords().count(bare)) return std::nullopt;
    if (std::none_of(bare.begin(), bare.end(), is_alpha)) return std::nullopt;
  }
  return try_normalize(phrase);
}

// Alias phrases written out in prose ("no relation", "don't know").
std::vector<Hit> find_alias_phrases(std::string_view text) {
  static constexpr std::array<std::string_view, 6> kPhrases = {
      "no relation", "no/other relation", "don't know",
      "dont know",   "don\xE2\x80\x99t know", "no_relation",
  };
  std::vector<Hit> hits;
  const std::string lower = lowercase(text);
  for (auto phrase : kPhrases) {
    for (std::size_t pos = lower.find(phrase); pos != std::string::npos;
         pos = lower.find(phrase, pos + 1)) {
      const std::size_t end = pos + phrase.size();
      if (pos > 0 && is_word(lower[pos - 1])) continue;
      if (end < lower.size() && is_word(lower[end])) continue;
      hits.push_back({pos, normalize_label(phrase)});
    }
  }
  return hits;
}

// Quoted content that is a snake_case/namespaced token or a reserved alias.
std::vector<Hit> find_quoted_labels(std::string_view text) {
  std::vector<Hit> hits;
  for (const auto& q : find_quoted(text)) {
    if (auto alias = reserved_alias(q.content)) {
      hits.push_back({q.begin, *alias});
      continue;
    }
    auto tokens = find_label_tokens(q.content);
    if (tokens.size() == 1 && split_words(q.content).size() == 1) {
      hits.push_back({q.begin + tokens.front().begin, tokens.front().label});
    }
  }
  return hits;
}

std::vector<Hit> strong_hits(std::string_view text) {
  std::vector<Hit> hits = find_label_tokens(text);
  for (auto& h : find_alias_phrases(text)) hits.push_back(std::move(h));
  for (auto& h : find_quoted_labels(text)) hits.push_back(std::move(h));
  std::stable_sort(hits.begin(), hits.end(),
                   [](const Hit& a, const Hit& b) { return a.begin < b.begin; });
  return hits;
}

std::string resolve_against_options(std::string label, const OptionSet& options) {
  if (options.contains(label) || is_reserved_label(label)) return label;
  if (label.find(':') != std::string::npos) return label;
  const std::string* match = nullptr;
  for (const auto& option : options.relations) {
    const auto colon = option.rfind(':');
    if (colon == std::string::npos) continue;
    if (std::string_view(option).substr(colon + 1) == label) {
      if (match != nullptr) return label;  // ambiguous
      match = &option;
    }
  }
  return match ? *match : label;
}

// ---------------------------------------------------------------------------
// Conclusion

struct Conclusion {
  std::string label;
  std::size_t region_begin = 0;
};

enum class MarkerKind { Colon, Is };

struct Marker {
  std::size_t begin = 0;  // keyword start
  std::size_t value = 0;  // first byte after the delimiter
  MarkerKind kind = MarkerKind::Colon;
};

std::vector<Marker> find_markers(std::string_view lower) {
  static constexpr std::array<std::string_view, 11> kKeywords = {
      "final answer", "final relation", "relation class", "answer",
      "relation",     "conclusion",     "label",          "classification",
      "prediction",   "output",         "final label",
  };
  std::vector<Marker> markers;
  for (auto kw : kKeywords) {
    for (std::size_t pos = lower.find(kw); pos != std::string::npos;
         pos = lower.find(kw, pos + 1)) {
      if (pos > 0 && is_word(lower[pos - 1])) continue;
      std::size_t j = pos + kw.size();
      if (j < lower.size() && is_word(lower[j])) continue;
      while (j < lower.size() && (lower[j] == ' ' || lower[j] == '\t' ||
                                  lower[j] == '*' || lower[j] == '_')) {
        ++j;
      }
      if (j >= lower.size()) continue;
      if (lower[j] == ':' || lower[j] == '=') {
        markers.push_back({pos, j + 1, MarkerKind::Colon});
      } else if (lower.compare(j, 2, "is") == 0 &&
                 (j + 2 >= lower.size() || !is_word(lower[j + 2]))) {
        std::size_t k = j + 2;
        while (k < lower.size() && (lower[k] == ' ' || lower[k] == '*')) ++k;
        if (k < lower.size() && lower[k] == ':') {
          markers.push_back({pos, k + 1, MarkerKind::Colon});
        } else {
          markers.push_back({pos, j + 2, MarkerKind::Is});
        }
      }
    }
  }
  std::sort(markers.begin(), markers.end(),
            [](const Marker& a, const Marker& b) { return a.begin < b.begin; });
  return markers;
}

// The phrase right after a marker, up to the end of its clause.
std::string_view clause_after(std::string_view text, std::size_t from) {
  std::size_t i = from;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t' ||
                             text[i] == '*' || text[i] == '#')) {
    ++i;
  }
  std::size_t j = i;
  while (j < text.size()) {
    const char c = text[j];
    if (c == '\n' || c == ',' || c == ';' || c == '(' || c == ')' || c == '!' ||
        c == '?') {
      break;
    }
    if (c == '.' && (j + 1 >= text.size() || is_space(text[j + 1]))) break;
    ++j;
  }
  std::string_view clause = text.substr(i, j - i);
  const std::string lower = lowercase(clause);
  for (std::string_view cut : {" because", " since", " as ", " which", " given"}) {
    const auto pos = lower.find(cut);
    if (pos != std::string::npos) clause = clause.substr(0, pos);
  }
  while (!clause.empty() && (clause.back() == '*' || is_space(clause.back()))) {
    clause.remove_suffix(1);
  }
  return clause;
}

std::optional<std::string> immediate_candidate(std::string_view text,
                                               const Marker& marker) {
  std::size_t i = marker.value;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '*')) {
    ++i;
  }
  if (i < text.size()) {
    if (auto q = quoted_at(text, i)) {
      if (auto alias = reserved_alias(q->content)) return alias;
      auto tokens = find_label_tokens(q->content);
      if (!tokens.empty()) return tokens.front().label;
      return plain_label(q->content);
    }
  }
  const std::string_view clause = clause_after(text, marker.value);
  if (clause.empty()) return std::nullopt;
  if (auto tokens = find_label_tokens(clause); !tokens.empty()) {
    return tokens.front().label;
  }
  if (auto alias = reserved_alias(clause)) return alias;
  if (auto aliases = find_alias_phrases(clause); !aliases.empty()) {
    return aliases.front().label;
  }
  if (marker.kind == MarkerKind::Colon) return plain_label(clause);
  return std::nullopt;
}

std::optional<Conclusion> marker_conclusion(std::string_view scrubbed) {
  const std::string lower = lowercase(scrubbed);
  const auto markers = find_markers(lower);
  for (auto it = markers.rbegin(); it != markers.rend(); ++it) {
    if (auto label = immediate_candidate(scrubbed, *it)) {
      return Conclusion{*label, it->begin};
    }
    if (it->kind != MarkerKind::Colon) continue;
    // "Conclusion: since nothing fits, the answer must be no_relation."
    auto hits = strong_hits(scrubbed.substr(it->value));
    if (!hits.empty()) return Conclusion{hits.back().label, it->begin};
  }
  return std::nullopt;
}

std::optional<Conclusion> line_conclusion(std::string_view scrubbed,
                                          bool allow_bare_line) {
  std::size_t line_end = scrubbed.size();
  bool last_non_empty = true;
  while (true) {
    const std::size_t nl =
        line_end == 0 ? std::string_view::npos : scrubbed.rfind('\n', line_end - 1);
    const std::size_t line_begin = nl == std::string_view::npos ? 0 : nl + 1;
    const std::string_view line = scrubbed.substr(line_begin, line_end - line_begin);
    if (!trim(line).empty()) {
      auto hits = strong_hits(line);
      if (!hits.empty()) {
        return Conclusion{hits.back().label, line_begin + hits.back().begin};
      }
      if (last_non_empty && allow_bare_line) {
        std::string_view bare = trim(line);
        while (!bare.empty() && (bare.front() == '-' || bare.front() == '*' ||
                                 bare.front() == '#' || bare.front() == '>')) {
          bare.remove_prefix(1);
        }
        if (line.size() <= 60) {
          if (auto label = plain_label(bare)) return Conclusion{*label, line_begin};
        }
      }
      last_non_empty = false;
    }
    if (line_begin == 0) break;
    line_end = line_begin - 1;
  }
  return std::nullopt;
}

bool matches_noise_pattern(std::string_view text, const NoiseConfig& config) {
  if (has_placeholder(text)) return true;
  const std::string lower = lowercase(text);
  return std::any_of(config.patterns.begin(), config.patterns.end(),
                     [&](const std::string& p) {
                       return !p.empty() && lower.find(lowercase(p)) != std::string::npos;
                     });
}

std::optional<Conclusion> find_conclusion(std::string_view scrubbed,
                                          bool noise_matched) {
  if (auto c = marker_conclusion(scrubbed)) return c;
  return line_conclusion(scrubbed, !noise_matched);
}

// ---------------------------------------------------------------------------
// Suggestions

std::vector<Hit> cue_phrase_hits(std::string_view text) {
  static constexpr std::array<std::string_view, 12> kCues = {
      "more accurate relation like",    "more accurate relation would be",
      "more accurate relation is",      "more appropriate relation like",
      "more appropriate relation would be", "a better option would be",
      "a better option is",             "better described as",
      "relation like",                  "relation such as",
      "such as",                        "a better fit would be",
  };
  std::vector<Hit> hits;
  const std::string lower = lowercase(text);
  for (auto cue : kCues) {
    for (std::size_t pos = lower.find(cue); pos != std::string::npos;
         pos = lower.find(cue, pos + 1)) {
      if (pos > 0 && is_word(lower[pos - 1])) continue;
      std::size_t i = pos + cue.size();
      for (int item = 0; item < 3 && i < text.size(); ++item) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '*')) ++i;
        if (i >= text.size()) break;
        std::optional<std::string> label;
        std::size_t item_begin = i;
        if (auto q = quoted_at(text, i)) {
          label = plain_label(q->content);
          item_begin = q->begin;
          i = q->end;
        } else {
          std::size_t words = 0;
          std::size_t j = i;
          std::size_t phrase_end = i;
          while (j < text.size() && words < 4) {
            std::size_t k = j;
            while (k < text.size() && !is_space(text[k]) && text[k] != ',' &&
                   text[k] != ';' && text[k] != '(' && text[k] != ')' &&
                   text[k] != '!' && text[k] != '?' &&
                   !(text[k] == '.' && (k + 1 >= text.size() || is_space(text[k + 1])))) {
              ++k;
            }
            if (k == j) break;
            const std::string word = lowercase(text.substr(j, k - j));
            if (span_terminators().count(word)) break;
            phrase_end = k;
            ++words;
            j = k;
            if (j < text.size() && (text[j] == ' ' || text[j] == '\t')) {
              ++j;
            } else {
              break;
            }
          }
          if (phrase_end > i) label = plain_label(text.substr(i, phrase_end - i));
          i = phrase_end;
        }
        if (label) hits.push_back({item_begin, *label});
        // Continue through "X or Y" and "X, Y" lists.
        std::size_t k = i;
        while (k < text.size() && (text[k] == ' ' || text[k] == '*' ||
                                   text[k] == '\'' || text[k] == '"')) {
          ++k;
        }
        if (k < text.size() && text[k] == ',') {
          i = k + 1;
          continue;
        }
        const std::string rest = lowercase(text.substr(k, 4));
        if (rest.rfind("or ", 0) == 0) {
          i = k + 3;
        } else if (rest.rfind("and ", 0) == 0) {
          i = k + 4;
        } else {
          break;
        }
      }
    }
  }
  return hits;
}

}  // namespace

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::Ok:
      return "ok";
    case ParseStatus::NoConclusion:
      return "no_conclusion";
    case ParseStatus::Noise:
      return "noise";
  }
  return "noise";
}

ParseStatus parse_status_from_string(std::string_view text) {
  if (text == "ok") return ParseStatus::Ok;
  if (text == "no_conclusion") return ParseStatus::NoConclusion;
  if (text == "noise") return ParseStatus::Noise;
  throw ContractError("unknown parse status: " + std::string(text));
}

std::vector<std::string> extract_suggestions(std::string_view reasoning_text,
                                             const OptionSet& options,
                                             const ParserConfig& config) {
  const std::string scrubbed = scrub_instruction_echoes(reasoning_text);
  std::vector<Hit> hits = find_label_tokens(scrubbed);
  for (auto& h : cue_phrase_hits(scrubbed)) hits.push_back(std::move(h));
  std::stable_sort(hits.begin(), hits.end(),
                   [](const Hit& a, const Hit& b) { return a.begin < b.begin; });

  std::vector<std::string> out;
  for (auto& hit : hits) {
    std::string label = resolve_against_options(std::move(hit.label), options);
    if (is_reserved_label(label)) continue;
    if (std::find(config.ignored_labels.begin(), config.ignored_labels.end(),
                  label) != config.ignored_labels.end()) {
      continue;
    }
    if (std::find(out.begin(), out.end(), label) == out.end()) {
      out.push_back(std::move(label));
    }
  }
  return out;
}

bool detect_noise(std::string_view raw_text, const ParserConfig& config) {
  if (trim(raw_text).empty()) return true;
  if (!matches_noise_pattern(raw_text, config.noise)) return false;
  const std::string scrubbed = scrub_instruction_echoes(raw_text);
  return !find_conclusion(scrubbed, true).has_value();
}

ParsedResponse parse(std::string_view instance_id, std::string_view raw_text,
                     PromptTier tier, const OptionSet& options,
                     const ParserConfig& config) {
  ParsedResponse out;
  out.instance_id = std::string(instance_id);
  out.tier = tier;
  out.raw_digest = sha256_hex(raw_text);

  if (trim(raw_text).empty()) {
    out.status = ParseStatus::Noise;
    return out;
  }
  const bool noise_matched = matches_noise_pattern(raw_text, config.noise);
  const std::string scrubbed = scrub_instruction_echoes(raw_text);
  const auto conclusion = find_conclusion(scrubbed, noise_matched);

  if (!conclusion) {
    out.reasoning_text = std::string(trim(raw_text));
    if (noise_matched) {
      out.status = ParseStatus::Noise;
      return out;
    }
    out.status = ParseStatus::NoConclusion;
    out.suggested_relations = extract_suggestions(raw_text, options, config);
    return out;
  }

  out.status = ParseStatus::Ok;
  out.concluded_label = resolve_against_options(conclusion->label, options);
  const std::string_view reasoning = raw_text.substr(0, conclusion->region_begin);
  out.reasoning_text = std::string(trim(reasoning));
  for (auto& label : extract_suggestions(reasoning, options, config)) {
    if (label != *out.concluded_label) out.suggested_relations.push_back(std::move(label));
  }
  return out;
}

}  // namespace hobson
