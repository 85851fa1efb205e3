#include <doctest.h>

#include "hobson/recovery.hpp"
#include "hobson/synth.hpp"

using namespace hobson;

namespace {

const std::vector<std::string> kOptions = {"org:org:agreement_with", "org:org:subsidiary_of",
                                           "org:org:shares_of", "org:org:acquired_by"};

}  // namespace

TEST_SUITE("recovery") {

TEST_CASE("builtin profile rates are recovered in every tier") {
  const auto p = AnnotatorProfile::builtin();
  for (auto tier : kAllTiers) {
    CAPTURE(to_string(tier));
    const auto r = check_recovery(p, tier, 2000, kOptions);
    CHECK(r.flag_mismatches == 0);
    CHECK(r.counts.n_total + r.counts.n_noise == 2000);
    for (const auto& c : r.checks) {
      CAPTURE(c.name);
      CAPTURE(c.observed);
      CAPTURE(c.expected);
      CHECK(c.pass());
    }
    CHECK(r.pass());
  }
}

TEST_CASE("check set depends on the tier") {
  const auto p = AnnotatorProfile::builtin();
  auto names = [&](PromptTier t) {
    std::vector<std::string> out;
    for (const auto& c : check_recovery(p, t, 200, kOptions).checks) out.push_back(c.name);
    return out;
  };
  CHECK(names(PromptTier::Constrained) == std::vector<std::string>{"noise", "HR", "HCR", "CBR"});
  CHECK(names(PromptTier::SemiConstrained) ==
        std::vector<std::string>{"noise", "NRR", "HCR", "CBR"});
  CHECK(names(PromptTier::OpenEnded) == std::vector<std::string>{"noise", "NRR"});
}

TEST_CASE("a check outside three sigma fails") {
  RecoveryCheck c;
  c.observed = 0.5;
  c.expected = 0.4;
  c.sigma = 0.01;
  c.denominator = 100;
  CHECK_FALSE(c.pass());
  c.sigma = 0.05;
  CHECK(c.pass());
  c.denominator = 0;
  CHECK_FALSE(c.pass());
}

}
