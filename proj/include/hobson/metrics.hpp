#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hobson/classifier.hpp"
#include "hobson/prompt.hpp"

namespace hobson {

// A percentage held as an exact count of hundredths ("37.50" -> 3750).
class Percent {
 public:
  constexpr Percent() = default;
  static constexpr Percent from_hundredths(std::int64_t h) { return Percent(h); }

  /// numerator/denominator as a percentage rounded half-up to two decimals,
  /// computed in integers so ties are exact.
  static Percent of_ratio(std::int64_t numerator, std::int64_t denominator);

  constexpr std::int64_t hundredths() const { return hundredths_; }
  double value() const { return static_cast<double>(hundredths_) / 100.0; }
  // Fixed two decimals, e.g. "1.21".
  std::string str() const;

  friend constexpr bool operator==(Percent, Percent) = default;

 private:
  constexpr explicit Percent(std::int64_t h) : hundredths_(h) {}
  std::int64_t hundredths_ = 0;
};

struct MetricsCounts {
  std::int64_t n_total = 0;  // non-noise responses
  std::int64_t n_hc = 0;
  std::int64_t n_cb = 0;
  std::int64_t n_h = 0;
  std::int64_t n_nr = 0;
  std::int64_t n_noise = 0;
  std::int64_t n_dont_know = 0;

  MetricsCounts& operator+=(const MetricsCounts& other);
  friend bool operator==(const MetricsCounts&, const MetricsCounts&) = default;
};

struct ReportKey {
  std::string model;
  std::string dataset;
  PromptTier tier = PromptTier::Constrained;
  double temperature = 0.0;

  friend bool operator==(const ReportKey&, const ReportKey&) = default;
};

struct MetricsReport {
  ReportKey key;
  std::optional<Percent> hcr;
  std::optional<Percent> cbr;
  std::optional<Percent> hr;
  std::optional<Percent> nrr;
  MetricsCounts counts;
  // n_total was zero; every rate is N/A.
  bool empty_cell = false;
};

/// Sums verdict flags. Noise verdicts only increment n_noise. Throws
/// ContractError when verdicts span more than one tier.
MetricsCounts tally(const std::vector<BehaviorVerdict>& verdicts);

/// HCR = HC/total, CBR = CB/HC, HR = H/total, NRR = NR/total, as
/// percentages. Rates a tier does not define are N/A (HR outside
/// constrained, NRR in constrained, HCR/CBR/HR in open-ended), as is CBR
/// when n_hc is zero.
MetricsReport compute_rates(const MetricsCounts& counts, PromptTier tier,
                            ReportKey key = {});

/// Cohen's kappa between two annotators' label sequences. Throws
/// ContractError on empty input or a length mismatch.
double cohen_kappa(const std::vector<std::string>& run_a,
                   const std::vector<std::string>& run_b);

using LabelEncoding = std::map<std::string, int>;

/// Ordinal codes for rank correlation: no_relation = 0, dont_know = 1,
/// then `registry_labels` in order, then every other label in order of first
/// appearance across `observed`.
LabelEncoding canonical_label_encoding(
    const std::vector<std::string>& registry_labels,
    const std::vector<std::vector<std::string>>& observed);

/// Spearman's rho of the encoded sequences (Pearson correlation of
/// average ranks). Throws ContractError on length mismatch, fewer than two
/// items, labels missing from `encoding`, or zero variance ("undefined
/// correlation").
double spearman_rho(const std::vector<std::string>& run_a,
                    const std::vector<std::string>& run_b,
                    const LabelEncoding& encoding);

struct RunPairAgreement {
  int run_a = 0;
  int run_b = 0;
  std::size_t n_items = 0;
  double kappa = 0.0;
  std::optional<double> rho;  // empty when the correlation is undefined
};

struct AgreementReport {
  ReportKey key;
  std::optional<double> kappa_min;
  std::optional<double> kappa_max;
  std::optional<double> rho_min;
  std::optional<double> rho_max;
  std::vector<RunPairAgreement> per_pair;
};

// One run's concluded label per instance id; noise and missing conclusions
// are left out.
using RunLabels = std::map<std::string, std::string>;

/// Pairwise agreement over every pair of runs, restricted to the instances
/// both runs concluded. Pairs with no shared instance are skipped.
AgreementReport compute_agreement(const ReportKey& key,
                                  const std::map<int, RunLabels>& runs,
                                  const LabelEncoding& encoding);

}  // namespace hobson
