#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hobson/corpus.hpp"

namespace hobson {

// Declaration order is the report order.
enum class PromptTier { Constrained, SemiConstrained, OpenEnded };

inline constexpr std::array<PromptTier, 3> kAllTiers = {
    PromptTier::Constrained, PromptTier::SemiConstrained,
    PromptTier::OpenEnded};

// "constrained", "semi_constrained", "open_ended".
std::string_view to_string(PromptTier tier);
// Accepts the to_string forms plus "const", "semi", "open".
PromptTier parse_tier(std::string_view text);
// Table labels: "Const.", "Semi", "Open".
std::string_view display_name(PromptTier tier);

struct RenderedPrompt {
  std::string instance_id;
  PromptTier tier = PromptTier::Constrained;
  std::string text;
  std::vector<std::string> options_used;
};

/// Replaces every `{name}` in `tmpl` with `values.at(name)` in a single
/// left-to-right pass; substituted text is never rescanned. Throws
/// ContractError on a placeholder with no value.
std::string substitute_placeholders(
    std::string_view tmpl, const std::map<std::string, std::string>& values);

// True when `text` contains a `{identifier}` sequence.
bool has_placeholder(std::string_view text);

/// One template per tier. Defaults are the built-in copies of
/// assets/templates/*.txt; a directory holding constrained.txt,
/// semi_constrained.txt and open_ended.txt overrides them.
class TemplateSet {
 public:
  static TemplateSet defaults();
  static TemplateSet from_directory(const std::filesystem::path& dir);

  const std::string& template_for(PromptTier tier) const;

 private:
  std::array<std::string, 3> templates_;
};

// The built-in verbatim template for a tier.
const std::string& template_for(PromptTier tier);

struct RenderOptions {
  // List no_relation inside {options} as well as in the fallback sentence.
  bool list_no_relation_in_options = false;
};

// "'a', 'b', 'c'" in the given order.
std::string format_option_list(const std::vector<std::string>& labels);

/// Fills the tier's template for one instance. Constrained and
/// semi-constrained prompts need a non-empty option list; the open-ended
/// prompt ignores `options`.
RenderedPrompt render(const RelationInstance& instance, PromptTier tier,
                      const OptionSet& options,
                      const TemplateSet& templates = TemplateSet::defaults(),
                      const RenderOptions& render_options = {});

}  // namespace hobson
