#include "hobson/recovery.hpp"

#include <cmath>

#include "hobson/classifier.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"
#include "hobson/parser.hpp"

namespace hobson {
namespace {

RecoveryCheck make_check(std::string name, std::int64_t hits, std::int64_t denominator,
                         double expected) {
  RecoveryCheck c;
  c.name = std::move(name);
  c.denominator = denominator;
  c.expected = expected;
  if (denominator > 0) {
    c.observed = static_cast<double>(hits) / static_cast<double>(denominator);
    c.sigma = std::sqrt(expected * (1.0 - expected) / static_cast<double>(denominator));
  }
  return c;
}

}  // namespace

bool RecoveryCheck::pass() const {
  if (denominator == 0) return false;
  // The small slack only absorbs rounding when sigma is zero.
  return std::abs(observed - expected) <= 3.0 * sigma + 1e-12;
}

bool RecoveryReport::pass() const {
  if (flag_mismatches != 0) return false;
  for (const auto& c : checks) {
    if (!c.pass()) return false;
  }
  return true;
}

RecoveryReport check_recovery(const AnnotatorProfile& profile, PromptTier tier,
                              std::int64_t n, std::span<const std::string> options) {
  if (n < 1) throw ContractError("recovery check needs n >= 1");
  OptionSet option_set;
  for (const auto& o : options) {
    if (!is_reserved_label(o)) option_set.relations.push_back(o);
  }

  RecoveryReport report;
  report.tier = tier;
  report.n = n;
  std::vector<BehaviorVerdict> verdicts;
  verdicts.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string id = "synth-" + std::to_string(i);
    const SyntheticResponse r = generate_response(id, tier, options, profile, 0);
    BehaviorVerdict v = classify(parse(id, r.response.text, tier, option_set), option_set, tier);
    const OutcomeFlags f = expected_flags(r.outcome);
    const bool match = f.hobsons_choice == v.is_hobsons_choice &&
                       f.conservative_bias == v.is_conservative_bias &&
                       f.hallucination == v.is_hallucination &&
                       f.new_relation == v.is_new_relation && f.dont_know == v.is_dont_know &&
                       f.noise == v.is_noise;
    report.flag_mismatches += !match;
    verdicts.push_back(std::move(v));
  }
  report.counts = tally(verdicts);
  const MetricsCounts& c = report.counts;

  double p_h = 0, p_hc = 0, p_cb = 0, p_nr = 0;
  for (const auto& [outcome, p] : profile.distribution(tier)) {
    const OutcomeFlags f = expected_flags(outcome);
    if (f.hallucination) p_h += p;
    if (f.hobsons_choice) p_hc += p;
    if (f.conservative_bias) p_cb += p;
    if (f.new_relation) p_nr += p;
  }
  const double p_total = 1.0 - profile.p_noise;

  report.checks.push_back(make_check("noise", c.n_noise, n, profile.p_noise));
  if (tier == PromptTier::Constrained) {
    report.checks.push_back(make_check("HR", c.n_h, c.n_total, p_h / p_total));
  } else {
    report.checks.push_back(make_check("NRR", c.n_nr, c.n_total, p_nr / p_total));
  }
  if (tier != PromptTier::OpenEnded) {
    report.checks.push_back(make_check("HCR", c.n_hc, c.n_total, p_hc / p_total));
    if (p_hc > 0) report.checks.push_back(make_check("CBR", c.n_cb, c.n_hc, p_cb / p_hc));
  }
  return report;
}

}  // namespace hobson
