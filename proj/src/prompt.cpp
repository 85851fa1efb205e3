#include "hobson/prompt.hpp"

#include <fstream>
#include <sstream>

#include "hobson/assets.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

bool is_identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

// Length of a `{identifier}` placeholder starting at text[pos], or 0.
std::size_t placeholder_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '{') return 0;
  std::size_t i = pos + 1;
  while (i < text.size() && is_identifier_char(text[i])) ++i;
  if (i == pos + 1 || i >= text.size() || text[i] != '}') return 0;
  return i - pos + 1;
}

std::size_t tier_index(PromptTier tier) { return static_cast<std::size_t>(tier); }

std::string read_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read template: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' ||
                           text.back() == ' ')) {
    text.pop_back();
  }
  if (text.empty()) throw InputError("empty template: " + path.string());
  return text;
}

}  // namespace

std::string_view to_string(PromptTier tier) {
  switch (tier) {
    case PromptTier::Constrained:
      return "constrained";
    case PromptTier::SemiConstrained:
      return "semi_constrained";
    case PromptTier::OpenEnded:
      return "open_ended";
  }
  return "constrained";
}

PromptTier parse_tier(std::string_view text) {
  if (text == "constrained" || text == "const") return PromptTier::Constrained;
  if (text == "semi_constrained" || text == "semi-constrained" || text == "semi") {
    return PromptTier::SemiConstrained;
  }
  if (text == "open_ended" || text == "open-ended" || text == "open") {
    return PromptTier::OpenEnded;
  }
  throw ContractError("unknown prompt tier: " + std::string(text));
}

std::string_view display_name(PromptTier tier) {
  switch (tier) {
    case PromptTier::Constrained:
      return "Const.";
    case PromptTier::SemiConstrained:
      return "Semi";
    case PromptTier::OpenEnded:
      return "Open";
  }
  return "Const.";
}

std::string substitute_placeholders(
    std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::size_t len = placeholder_length(tmpl, i);
    if (len == 0) {
      out += tmpl[i++];
      continue;
    }
    const std::string name(tmpl.substr(i + 1, len - 2));
    auto it = values.find(name);
    if (it == values.end()) {
      throw ContractError("template placeholder has no value: {" + name + "}");
    }
    out += it->second;
    i += len;
  }
  return out;
}

bool has_placeholder(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (placeholder_length(text, i) > 0) return true;
  }
  return false;
}

TemplateSet TemplateSet::defaults() {
  TemplateSet set;
  set.templates_[tier_index(PromptTier::Constrained)] = assets::kTemplateConstrained;
  set.templates_[tier_index(PromptTier::SemiConstrained)] =
      assets::kTemplateSemiConstrained;
  set.templates_[tier_index(PromptTier::OpenEnded)] = assets::kTemplateOpenEnded;
  return set;
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir) {
  TemplateSet set;
  for (PromptTier tier : kAllTiers) {
    set.templates_[tier_index(tier)] =
        read_template(dir / (std::string(to_string(tier)) + ".txt"));
  }
  return set;
}

const std::string& TemplateSet::template_for(PromptTier tier) const {
  return templates_[tier_index(tier)];
}

const std::string& template_for(PromptTier tier) {
  static const TemplateSet builtin = TemplateSet::defaults();
  return builtin.template_for(tier);
}

std::string format_option_list(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += '\'';
    out += labels[i];
    out += '\'';
  }
  return out;
}

RenderedPrompt render(const RelationInstance& instance, PromptTier tier,
                      const OptionSet& options, const TemplateSet& templates,
                      const RenderOptions& render_options) {
  RenderedPrompt prompt;
  prompt.instance_id = instance.id;
  prompt.tier = tier;

  if (tier != PromptTier::OpenEnded) {
    if (options.relations.empty()) {
      throw ContractError("empty option list for " + std::string(to_string(tier)) +
                          " prompt of " + instance.id);
    }
    prompt.options_used = options.relations;
    if (render_options.list_no_relation_in_options) {
      prompt.options_used.emplace_back(kNoRelation);
    }
  }

  const HighlightedText marked = mark_entities(instance);
  const std::map<std::string, std::string> values = {
      {"highlighted_text", marked.text},
      {"subject", marked.subject_surface},
      {"object", marked.object_surface},
      {"options", format_option_list(prompt.options_used)},
  };
  prompt.text = substitute_placeholders(templates.template_for(tier), values);
  return prompt;
}

}  // namespace hobson
