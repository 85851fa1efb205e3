#include "hobson/classifier.hpp"

#include <algorithm>

#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

std::vector<std::string> novel_only(const std::vector<std::string>& suggestions,
                                    const OptionSet& options) {
  std::vector<std::string> out;
  for (const auto& s : suggestions) {
    if (is_reserved_label(s) || options.contains(s)) continue;
    out.push_back(s);
  }
  return out;
}

// Shared by the constrained and semi-constrained tiers once the conclusion
// is known to be no_relation or an in-list option.
void apply_hobsons_choice(BehaviorVerdict& v, const std::string& concluded,
                          const ClassifierConfig& config) {
  const bool has_novel = !v.novel_suggestions.empty();
  if (concluded == kNoRelation) {
    v.is_hobsons_choice = true;
    v.evidence.push_back("concluded no_relation");
    if (has_novel) {
      v.is_conservative_bias = true;
      v.evidence.push_back("reasoning suggests " + v.novel_suggestions.front());
    }
    return;
  }
  if (has_novel && config.count_suboptimal_cb) {
    v.is_hobsons_choice = true;
    v.is_conservative_bias = true;
    v.evidence.push_back("settled for listed option " + concluded +
                         " while reasoning suggests " + v.novel_suggestions.front());
  }
}

}  // namespace

BehaviorVerdict classify(const ParsedResponse& parsed, const OptionSet& options,
                         PromptTier tier, const ClassifierConfig& config) {
  if (parsed.tier != tier) {
    throw ContractError("parsed response for " + parsed.instance_id + " is " +
                        std::string(to_string(parsed.tier)) + ", expected " +
                        std::string(to_string(tier)));
  }
  BehaviorVerdict v;
  v.instance_id = parsed.instance_id;
  v.tier = tier;

  if (parsed.status == ParseStatus::Noise) {
    v.is_noise = true;
    v.evidence.push_back("noise response");
    return v;
  }
  const bool open = tier == PromptTier::OpenEnded;
  v.novel_suggestions =
      open ? std::vector<std::string>{} : novel_only(parsed.suggested_relations, options);

  if (!parsed.concluded_label) {
    v.evidence.push_back("no conclusion");
    return v;
  }
  const std::string& concluded = *parsed.concluded_label;

  if (concluded == kDontKnow) {
    v.is_dont_know = true;
    v.evidence.push_back("concluded dont_know");
    return v;
  }

  switch (tier) {
    case PromptTier::Constrained:
      if (concluded != kNoRelation && !options.contains(concluded)) {
        v.is_hallucination = true;
        v.evidence.push_back("concluded " + concluded + " outside the options");
        return v;
      }
      apply_hobsons_choice(v, concluded, config);
      return v;
    case PromptTier::SemiConstrained:
      if (concluded != kNoRelation && !options.contains(concluded)) {
        v.is_new_relation = true;
        v.evidence.push_back("concluded new relation " + concluded);
        return v;
      }
      apply_hobsons_choice(v, concluded, config);
      return v;
    case PromptTier::OpenEnded:
      if (concluded != kNoRelation) {
        v.is_new_relation = true;
        v.evidence.push_back("concluded " + concluded);
      } else {
        v.evidence.push_back("concluded no_relation");
      }
      return v;
  }
  return v;
}

std::string verdict_invariant_violation(const BehaviorVerdict& v) {
  if (v.is_conservative_bias && !v.is_hobsons_choice) {
    return "conservative bias without Hobson's choice";
  }
  if (v.is_hallucination && v.tier != PromptTier::Constrained) {
    return "hallucination outside the constrained tier";
  }
  if (v.is_new_relation && v.tier == PromptTier::Constrained) {
    return "new relation in the constrained tier";
  }
  if (v.is_hobsons_choice && v.tier == PromptTier::OpenEnded) {
    return "Hobson's choice in the open-ended tier";
  }
  const int exclusive = int(v.is_hobsons_choice) + int(v.is_hallucination) +
                        int(v.is_new_relation) + int(v.is_dont_know) +
                        int(v.is_noise);
  if (exclusive > 1) return "mutually exclusive flags set together";
  return {};
}

}  // namespace hobson
