#include <doctest.h>

#include <random>

#include "hobson/error.hpp"
#include "hobson/metrics.hpp"
#include "support/fixtures.hpp"

using namespace hobson;

namespace {

// Half-up hundredths of a percent via quotient and remainder.
std::int64_t oracle_hundredths(std::int64_t num, std::int64_t den) {
  const std::int64_t scaled = num * 10000;
  const std::int64_t q = scaled / den;
  const std::int64_t r = scaled % den;
  return 2 * r >= den ? q + 1 : q;
}

MetricsCounts counts(std::int64_t total, std::int64_t hc, std::int64_t cb, std::int64_t h,
                     std::int64_t nr = 0) {
  MetricsCounts c;
  c.n_total = total;
  c.n_hc = hc;
  c.n_cb = cb;
  c.n_h = h;
  c.n_nr = nr;
  return c;
}

std::vector<std::string> labels(const std::vector<int>& v) {
  std::vector<std::string> out;
  for (int x : v) out.push_back("l" + std::to_string(x));
  return out;
}

LabelEncoding encoding_for(int k) {
  LabelEncoding e;
  for (int i = 0; i < k; ++i) e["l" + std::to_string(i)] = i;
  return e;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("percent rounds half up to two decimals") {
  CHECK(Percent::of_ratio(577, 1000).str() == "57.70");
  CHECK(Percent::of_ratio(7, 577).str() == "1.21");
  CHECK(Percent::of_ratio(1, 8).str() == "12.50");
  CHECK(Percent::of_ratio(1, 3).str() == "33.33");
  CHECK(Percent::of_ratio(2, 3).str() == "66.67");
  CHECK(Percent::of_ratio(1, 800).str() == "0.13");
  CHECK(Percent::of_ratio(1, 1600).str() == "0.06");
  CHECK(Percent::of_ratio(0, 5).str() == "0.00");
  CHECK(Percent::of_ratio(5, 5).str() == "100.00");
  CHECK_THROWS_AS(Percent::of_ratio(1, 0), ContractError);
  CHECK_THROWS_AS(Percent::of_ratio(-1, 3), ContractError);
}

TEST_CASE("property: percent matches the quotient-remainder oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    const std::int64_t den = 1 + static_cast<std::int64_t>(rng() % 5000);
    const std::int64_t num = static_cast<std::int64_t>(rng() % (den + 1));
    CAPTURE(num);
    CAPTURE(den);
    CHECK(Percent::of_ratio(num, den).hundredths() == oracle_hundredths(num, den));
  }
}

TEST_CASE("constrained row 200/120/45/3") {
  const auto r = compute_rates(counts(200, 120, 45, 3), PromptTier::Constrained);
  CHECK(r.hcr->str() == "60.00");
  CHECK(r.cbr->str() == "37.50");
  CHECK(r.hr->str() == "1.50");
  CHECK_FALSE(r.nrr);
  CHECK_FALSE(r.empty_cell);
}

TEST_CASE("constrained row 1000/577/7/0") {
  const auto r = compute_rates(counts(1000, 577, 7, 0), PromptTier::Constrained);
  CHECK(r.hcr->str() == "57.70");
  CHECK(r.cbr->str() == "1.21");
  CHECK(r.hr->str() == "0.00");
}

TEST_CASE("semi and open N/A patterns") {
  const auto semi = compute_rates(counts(200, 10, 2, 0, 163), PromptTier::SemiConstrained);
  CHECK(semi.nrr->str() == "81.50");
  CHECK_FALSE(semi.hr);
  CHECK(semi.hcr->str() == "5.00");
  CHECK(semi.cbr->str() == "20.00");

  const auto open = compute_rates(counts(200, 0, 0, 0, 163), PromptTier::OpenEnded);
  CHECK(open.nrr->str() == "81.50");
  CHECK_FALSE(open.hcr);
  CHECK_FALSE(open.cbr);
  CHECK_FALSE(open.hr);
}

TEST_CASE("CBR is undefined without Hobson's choice; empty cell") {
  const auto r = compute_rates(counts(10, 0, 0, 1), PromptTier::Constrained);
  CHECK(r.hcr->str() == "0.00");
  CHECK_FALSE(r.cbr);
  const auto e = compute_rates(counts(0, 0, 0, 0), PromptTier::Constrained);
  CHECK(e.empty_cell);
  CHECK_FALSE(e.hcr);
  CHECK_FALSE(e.hr);
}

TEST_CASE("inconsistent counts are rejected") {
  CHECK_THROWS_AS(compute_rates(counts(10, 2, 3, 0), PromptTier::Constrained), ContractError);
  CHECK_THROWS_AS(compute_rates(counts(10, 11, 0, 0), PromptTier::Constrained), ContractError);
}

TEST_CASE("tally excludes noise from the denominator") {
  std::vector<BehaviorVerdict> vs(5);
  vs[0].is_noise = true;
  vs[1].is_hobsons_choice = vs[1].is_conservative_bias = true;
  vs[2].is_hobsons_choice = true;
  vs[3].is_hallucination = true;
  vs[4].is_dont_know = true;
  const auto c = tally(vs);
  CHECK(c.n_total == 4);
  CHECK(c.n_noise == 1);
  CHECK(c.n_hc == 2);
  CHECK(c.n_cb == 1);
  CHECK(c.n_h == 1);
  CHECK(c.n_dont_know == 1);
  vs[2].tier = PromptTier::OpenEnded;
  CHECK_THROWS_AS(tally(vs), ContractError);
}

TEST_CASE("property: rates respect bounds and subset ordering") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t total = 1 + static_cast<std::int64_t>(rng() % 500);
    const std::int64_t hc = static_cast<std::int64_t>(rng() % (total + 1));
    const std::int64_t cb = static_cast<std::int64_t>(rng() % (hc + 1));
    const std::int64_t h = static_cast<std::int64_t>(rng() % (total - hc + 1));
    const auto r = compute_rates(counts(total, hc, cb, h), PromptTier::Constrained);
    CHECK(r.hcr->hundredths() >= 0);
    CHECK(r.hcr->hundredths() <= 10000);
    CHECK(r.hr->hundredths() <= 10000);
    if (hc > 0) CHECK(r.cbr->hundredths() <= 10000);
    else CHECK_FALSE(r.cbr);
  }
}

TEST_CASE("kappa fixtures") {
  CHECK(cohen_kappa({"a", "a", "b", "b"}, {"a", "b", "b", "b"}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cohen_kappa({"x", "y"}, {"y", "x"}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cohen_kappa({"x", "y", "z"}, {"x", "y", "z"}) == 1.0);
  CHECK(cohen_kappa({"x", "x"}, {"x", "x"}) == 1.0);
  // One label each, but different ones: no agreement beyond chance.
  CHECK(cohen_kappa({"x", "x"}, {"y", "y"}) == 0.0);
  CHECK_THROWS_AS(cohen_kappa({}, {}), ContractError);
  CHECK_THROWS_AS(cohen_kappa({"a"}, {"a", "b"}), ContractError);
}

TEST_CASE("kappa matches the exact oracle on random sequences") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const int n = 1 + static_cast<int>(rng() % 30);
    const int k = 1 + static_cast<int>(rng() % 4);
    std::vector<int> a(n), b(n);
    for (int j = 0; j < n; ++j) {
      a[j] = static_cast<int>(rng() % k);
      b[j] = static_cast<int>(rng() % k);
    }
    CHECK(std::abs(cohen_kappa(labels(a), labels(b)) - hobson::testing::oracle_kappa(a, b)) <=
          1e-12);
  }
}

TEST_CASE("spearman fixtures") {
  const auto enc = encoding_for(5);
  CHECK(spearman_rho(labels({0, 1, 2, 3}), labels({0, 1, 3, 4}), enc) == doctest::Approx(1.0));
  CHECK(spearman_rho(labels({0, 1, 2, 3}), labels({4, 3, 1, 0}), enc) == doctest::Approx(-1.0));
  // No ties: 1 - 6 sum d^2 / (n (n^2 - 1)) with d = (0, -2, 1, 1) -> 1 - 36/60.
  CHECK(spearman_rho(labels({0, 1, 2, 3}), labels({0, 3, 1, 2}), enc) ==
        doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(spearman_rho(labels({1, 1, 1}), labels({0, 1, 2}), enc),
                       "undefined correlation", ContractError);
  CHECK_THROWS_AS(spearman_rho(labels({0}), labels({0}), enc), ContractError);
  CHECK_THROWS_AS(spearman_rho({"zz", "l0"}, {"l0", "l1"}, enc), ContractError);
}

TEST_CASE("spearman matches the counting-rank oracle with ties") {
  std::mt19937_64 rng(9);
  const auto enc = encoding_for(6);
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    const int n = 2 + static_cast<int>(rng() % 25);
    std::vector<int> a(n), b(n);
    for (int j = 0; j < n; ++j) {
      a[j] = static_cast<int>(rng() % 6);
      b[j] = static_cast<int>(rng() % 6);
    }
    const auto expected = hobson::testing::oracle_rho(a, b);
    if (!expected) {
      CHECK_THROWS_AS(spearman_rho(labels(a), labels(b), enc), ContractError);
      continue;
    }
    ++compared;
    CHECK(std::abs(spearman_rho(labels(a), labels(b), enc) - *expected) <= 1e-9);
  }
  CHECK(compared > 1900);
}

TEST_CASE("label encoding puts reserved labels first, then registry order") {
  const auto enc = canonical_label_encoding({"b", "a"}, {{"c", "a", "no_relation"}});
  CHECK(enc.at("no_relation") == 0);
  CHECK(enc.at("dont_know") == 1);
  CHECK(enc.at("b") == 2);
  CHECK(enc.at("a") == 3);
  CHECK(enc.at("c") == 4);
}

TEST_CASE("agreement is pairwise-complete with min and max") {
  std::map<int, RunLabels> runs;
  runs[0] = {{"i1", "a"}, {"i2", "b"}, {"i3", "a"}, {"i4", "b"}};
  runs[1] = {{"i1", "a"}, {"i2", "b"}, {"i3", "b"}, {"i4", "b"}};
  runs[2] = {{"i1", "a"}, {"i2", "b"}, {"i3", "a"}};  // i4 missing
  LabelEncoding enc{{"a", 0}, {"b", 1}};
  const auto r = compute_agreement({}, runs, enc);
  REQUIRE(r.per_pair.size() == 3);
  CHECK(r.per_pair[0].n_items == 4);
  CHECK(r.per_pair[1].n_items == 3);
  CHECK(r.per_pair[1].kappa == 1.0);
  CHECK(*r.kappa_max == 1.0);
  // Runs 1 and 2 over i1..i3: (2/3 - 4/9) / (5/9).
  CHECK(*r.kappa_min == doctest::Approx(0.4));
  REQUIRE(r.rho_min);
  CHECK(*r.rho_max == doctest::Approx(1.0));
}

TEST_CASE("undefined rho is left empty") {
  std::map<int, RunLabels> runs;
  runs[0] = {{"i1", "a"}, {"i2", "a"}};
  runs[1] = {{"i1", "a"}, {"i2", "a"}};
  const auto r = compute_agreement({}, runs, {{"a", 0}});
  REQUIRE(r.per_pair.size() == 1);
  CHECK(r.per_pair[0].kappa == 1.0);
  CHECK_FALSE(r.per_pair[0].rho);
  CHECK_FALSE(r.rho_min);
}

}
