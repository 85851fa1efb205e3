#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hobson/corpus.hpp"
#include "hobson/gateway.hpp"
#include "hobson/prompt.hpp"

namespace hobson {

// What the synthetic annotator decided to do for one request.
enum class Outcome {
  Noise,
  Hallucinate,   // constrained: conclude a label outside the options
  HcPlain,       // conclude no_relation, nothing better named
  Cb,            // conclude no_relation, reasoning names a novel label
  Assert,        // conclude one of the options
  NewRelation,   // semi/open: conclude a novel label
  DontKnow,
  Conservative,  // open: conclude no_relation
};

std::string_view to_string(Outcome outcome);

struct ConstrainedProbabilities {
  double p_hallucinate = 0.0;
  double p_hc_plain = 0.0;
  double p_cb = 0.0;
  double p_assert = 1.0;
};

struct SemiProbabilities {
  double p_nr = 0.0;
  double p_hc_plain = 0.0;
  double p_cb = 0.0;
  double p_assert = 1.0;
  double p_dont_know = 0.0;
};

struct OpenProbabilities {
  double p_nr = 1.0;
  double p_conservative = 0.0;
  double p_dont_know = 0.0;
};

struct AnnotatorProfile {
  double p_noise = 0.0;
  ConstrainedProbabilities constrained;
  SemiProbabilities semi;
  OpenProbabilities open;
  std::vector<std::string> novel_label_pool = {"owner_of", "shareholder_of"};
  std::uint64_t seed = 0;

  static AnnotatorProfile from_json(const nlohmann::json& doc);
  static AnnotatorProfile from_file(const std::filesystem::path& path);
  // The shipped assets/profiles/default.json.
  static AnnotatorProfile builtin();

  /// Throws ContractError unless every tier's probabilities plus p_noise sum
  /// to 1 (within 1e-9), none is negative, and the pool holds canonical,
  /// non-reserved labels.
  void validate() const;

  /// Throws ContractError when a pool label equals a registry label or the
  /// bare suffix of a namespaced one (the parser would resolve it into the
  /// option list).
  void validate_against(const OptionRegistry& registry) const;

  // Outcomes and probabilities for a tier, noise first.
  std::vector<std::pair<Outcome, double>> distribution(PromptTier tier) const;
};

nlohmann::json to_json(const AnnotatorProfile& profile);

struct SyntheticResponse {
  RawResponse response;
  Outcome outcome = Outcome::Noise;
  // The label the outcome revolves around (conclusion or CB suggestion).
  std::string label;
};

/// Samples one outcome from a stream keyed by (seed, instance id, tier,
/// run index) and renders reply text that the response parser maps back to
/// that outcome. `options` are the labels offered in the prompt (reserved
/// labels in it are ignored); Assert outcomes need at least one.
SyntheticResponse generate_response(std::string_view instance_id,
                                    PromptTier tier,
                                    std::span<const std::string> options,
                                    const AnnotatorProfile& profile,
                                    int run_index);

// Flags classify() must raise for a reply generated with `outcome`.
struct OutcomeFlags {
  bool hobsons_choice = false;
  bool conservative_bias = false;
  bool hallucination = false;
  bool new_relation = false;
  bool dont_know = false;
  bool noise = false;
};

OutcomeFlags expected_flags(Outcome outcome);

struct ExpectedCounts {
  double n_total = 0;
  double n_hc = 0;
  double n_cb = 0;
  double n_h = 0;
  double n_nr = 0;
  double n_noise = 0;
  double n_dont_know = 0;
};

/// n * p for every counter the tier defines. Throws ContractError if n < 1.
ExpectedCounts expected_counts(const AnnotatorProfile& profile, PromptTier tier,
                               std::int64_t n);

// CompletionProvider backed by generate_response.
class SyntheticProvider : public CompletionProvider {
 public:
  explicit SyntheticProvider(AnnotatorProfile profile);

  std::string name() const override { return "synthetic"; }
  std::string send(const CompletionRequest& request) override;

  const AnnotatorProfile& profile() const { return profile_; }

 private:
  AnnotatorProfile profile_;
};

}  // namespace hobson
