#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hobson/classifier.hpp"
#include "hobson/gateway.hpp"
#include "hobson/http_provider.hpp"
#include "hobson/parser.hpp"

namespace hobson {

inline constexpr double kDefaultSimilarityThreshold = 0.7;

struct SimilarityPair {
  std::string instance_id;
  std::string source_label;  // constrained-tier CB suggestion
  std::string target_label;  // semi/open conclusion or its novel suggestion
  PromptTier target_tier = PromptTier::SemiConstrained;
  std::optional<double> score;  // empty = UNSCORED
  std::string unscored_reason;
};

struct UnmatchedCb {
  std::string instance_id;
  std::string reason;
};

struct CbJoin {
  std::vector<SimilarityPair> pairs;
  std::vector<UnmatchedCb> unmatched;
};

struct ConstrainedOutcome {
  BehaviorVerdict verdict;
  ParsedResponse parsed;
};

/// Pairs every CB verdict with the same instance's reply in `other_run`.
/// The source label is the verdict's first novel suggestion; the target is
/// the other reply's conclusion, or its first suggestion when that
/// conclusion is no_relation. CB instances without a usable counterpart are
/// listed in `unmatched` with a reason.
CbJoin join_cb_pairs(const std::vector<ConstrainedOutcome>& constrained,
                     const std::vector<ParsedResponse>& other_run,
                     PromptTier target_tier);

struct ScoreResult {
  std::optional<double> score;
  std::string reason;  // why the pair is unscored
};

class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual std::string name() const = 0;
  // `context` is the instance sentence, or empty for bare-label scoring.
  virtual ScoreResult score(const std::string& a, const std::string& b,
                            const std::string& context) = 0;
};

/// Jaccard similarity of the label's word sets, words being the pieces
/// between underscores and colons.
double lexical_similarity(const std::string& a, const std::string& b);

class LexicalScorer : public SimilarityScorer {
 public:
  std::string name() const override { return "lexical"; }
  ScoreResult score(const std::string& a, const std::string& b,
                    const std::string& context) override;
};

// Cosine similarity of service-provided embeddings, negatives clamped to 0.
class EmbeddingScorer : public SimilarityScorer {
 public:
  explicit EmbeddingScorer(std::shared_ptr<EmbeddingClient> client);
  std::string name() const override { return "embedding"; }
  ScoreResult score(const std::string& a, const std::string& b,
                    const std::string& context) override;

 private:
  std::shared_ptr<EmbeddingClient> client_;
};

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

// Pulls the first decimal number out of a judge reply, clamped to [0, 1].
std::optional<double> parse_judge_score(const std::string& reply);

/// Asks an LLM (through the gateway) to rate label similarity using the
/// judge template; placeholders {label_a}, {label_b}, {context}.
class JudgeScorer : public SimilarityScorer {
 public:
  JudgeScorer(std::shared_ptr<Gateway> gateway, std::string model,
              double temperature = 0.0, std::string judge_template = {});
  std::string name() const override { return "judge"; }
  ScoreResult score(const std::string& a, const std::string& b,
                    const std::string& context) override;

  std::string render_prompt(const std::string& a, const std::string& b,
                            const std::string& context) const;

 private:
  std::shared_ptr<Gateway> gateway_;
  std::string model_;
  double temperature_;
  std::string template_;
};

// The built-in judge prompt template.
const std::string& default_judge_template();

struct SimilarityKey {
  std::string model;
  std::string dataset;
  std::string scorer;
  double constrained_temperature = 0.0;
  PromptTier target_tier = PromptTier::SemiConstrained;

  friend bool operator==(const SimilarityKey&, const SimilarityKey&) = default;
};

struct SimilarityReport {
  SimilarityKey key;
  double threshold = kDefaultSimilarityThreshold;
  std::size_t n_pairs = 0;  // scored pairs
  std::size_t n_unscored = 0;
  // Empty when n_pairs is zero.
  std::optional<double> fraction_above_threshold;
  std::optional<double> mean;
  std::optional<double> std_dev;  // population
};

/// Statistics over the scored pairs: share strictly above `threshold`,
/// mean, population standard deviation. Throws ContractError unless
/// 0 < threshold < 1.
SimilarityReport summarize(const std::vector<SimilarityPair>& pairs,
                           double threshold = kDefaultSimilarityThreshold,
                           SimilarityKey key = {});

}  // namespace hobson
