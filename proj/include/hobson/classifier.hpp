#pragma once

#include <string>
#include <vector>

#include "hobson/corpus.hpp"
#include "hobson/parser.hpp"

namespace hobson {

struct BehaviorVerdict {
  std::string instance_id;
  PromptTier tier = PromptTier::Constrained;
  bool is_hobsons_choice = false;
  bool is_conservative_bias = false;
  bool is_hallucination = false;
  bool is_new_relation = false;
  bool is_dont_know = false;
  bool is_noise = false;
  // Suggestions outside the option set, in mention order. The first one is
  // the label compared in the similarity analysis.
  std::vector<std::string> novel_suggestions;
  std::vector<std::string> evidence;

  friend bool operator==(const BehaviorVerdict&, const BehaviorVerdict&) = default;
};

struct ClassifierConfig {
  // Also count "concluded an in-list option while the reasoning names a
  // better label outside the list" as Hobson's choice with conservative bias.
  bool count_suboptimal_cb = false;
};

/// Applies the behavior decision table for the tier. Throws ContractError
/// when `parsed.tier != tier`.
///
///   noise                                  -> noise
///   constrained:
///     dont_know                            -> dont_know
///     outside options and no_relation      -> hallucination
///     no_relation                          -> HC; CB if a novel suggestion
///     in options, novel suggestion, flag   -> HC + CB
///   semi-constrained:
///     dont_know                            -> dont_know
///     outside options and no_relation      -> new relation
///     no_relation                          -> HC; CB if a novel suggestion
///     in options, novel suggestion, flag   -> HC + CB
///   open-ended:
///     dont_know                            -> dont_know
///     no_relation                          -> (no flags)
///     anything else                        -> new relation
///
/// A missing conclusion raises no flags.
BehaviorVerdict classify(const ParsedResponse& parsed, const OptionSet& options,
                         PromptTier tier, const ClassifierConfig& config = {});

// Checks the subset and exclusivity rules; returns the violated rule or "".
std::string verdict_invariant_violation(const BehaviorVerdict& verdict);

}  // namespace hobson
