#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hobson/metrics.hpp"
#include "hobson/synth.hpp"

namespace hobson {

// Observed rate against the profile's configured one.
struct RecoveryCheck {
  std::string name;  // "HR", "HCR", "CBR", "NRR", "noise"
  double observed = 0.0;
  double expected = 0.0;
  double sigma = 0.0;  // binomial, over the realized denominator
  std::int64_t denominator = 0;

  bool pass() const;  // |observed - expected| <= 3 sigma
};

struct RecoveryReport {
  PromptTier tier = PromptTier::Constrained;
  std::int64_t n = 0;
  MetricsCounts counts;
  std::vector<RecoveryCheck> checks;
  // Replies whose verdict flags differ from the sampled outcome's.
  std::int64_t flag_mismatches = 0;

  bool pass() const;
};

/// Generates `n` synthetic replies for `tier`, runs them through parse and
/// classify, and compares the tallied rates with the profile. Instance ids
/// are "synth-0" .. "synth-<n-1>"; every reply is offered `options`.
RecoveryReport check_recovery(const AnnotatorProfile& profile, PromptTier tier,
                              std::int64_t n, std::span<const std::string> options);

}  // namespace hobson
