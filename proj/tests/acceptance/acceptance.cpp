// One line per acceptance criterion: [PASS], [FAIL] or [SKIP], then detail.
// Exit status is non-zero when any criterion fails; skips do not fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>

#include "hobson/error.hpp"
#include "hobson/metrics.hpp"
#include "hobson/pipeline.hpp"
#include "hobson/recovery.hpp"
#include "hobson/serialization.hpp"
#include "hobson/similarity.hpp"
#include "hobson/synth.hpp"
#include "support/fixtures.hpp"
#include "support/truth_table.hpp"

using namespace hobson;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kClassifierBudgetSeconds = 1.0;
constexpr double kRecoveryBudgetSeconds = 30.0;
constexpr double kKappaTolerance = 1e-12;
constexpr double kRhoTolerance = 1e-9;
constexpr double kSimilarityTolerance = 1e-12;
constexpr std::int64_t kRecoveryN = 2000;

enum class Verdict { Pass, Fail, Skip };

struct Result {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

Result pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Result fail(std::string d) { return {Verdict::Fail, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::string> as_labels(const std::vector<int>& v) {
  std::vector<std::string> out;
  for (int x : v) out.push_back(std::string(1, static_cast<char>('A' + x)));
  return out;
}

Result classifier_table() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = testing::classifier_truth_table();
  std::size_t mismatches = 0;
  std::string first;
  for (const auto& row : rows) {
    const auto why =
        testing::truth_row_mismatch(row, classify(row.parsed, row.options, row.tier, row.config));
    if (!why.empty()) {
      if (mismatches++ == 0) first = row.describe() + ": " + why;
    }
  }
  const double secs = seconds_since(t0);
  const auto detail = fmt("%zu combinations, %zu mismatches, %.3fs (budget %.0fs)", rows.size(),
                          mismatches, secs, kClassifierBudgetSeconds);
  if (mismatches > 0) return fail(detail + "; first: " + first);
  if (secs >= kClassifierBudgetSeconds) return fail(detail);
  return pass(detail);
}

Result estimator_recovery() {
  AnnotatorProfile profile;
  profile.seed = 20240607;
  profile.p_noise = 0.0;
  profile.constrained = {0.05, 0.40, 0.20, 0.35};
  profile.novel_label_pool = {"owner_of", "shareholder_of", "board_member_of", "lender_to"};
  profile.validate();
  const std::vector<std::string> options = {"org:org:agreement_with", "org:org:subsidiary_of",
                                            "org:org:shares_of", "org:org:acquired_by"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = check_recovery(profile, PromptTier::Constrained, kRecoveryN, options);
  const double secs = seconds_since(t0);

  std::ostringstream d;
  bool ok = report.flag_mismatches == 0;
  for (const auto& name : {"HR", "HCR", "CBR"}) {
    const RecoveryCheck* c = nullptr;
    for (const auto& k : report.checks) {
      if (k.name == name) c = &k;
    }
    if (c == nullptr) {
      ok = false;
      d << name << " missing; ";
      continue;
    }
    ok = ok && c->pass();
    d << fmt("%s %.4f vs %.4f±3*%.4f (n=%lld)%s; ", name, c->observed, c->expected, c->sigma,
             static_cast<long long>(c->denominator), c->pass() ? "" : " OUT");
  }
  d << fmt("flag mismatches %lld, %.3fs (budget %.0fs)",
           static_cast<long long>(report.flag_mismatches), secs, kRecoveryBudgetSeconds);
  if (secs >= kRecoveryBudgetSeconds) ok = false;
  return ok ? pass(d.str()) : fail(d.str());
}

Result kappa_oracle() {
  std::size_t pairs = 0;
  double worst = 0.0;
  for (int len = 1; len <= 5; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 3;
    std::vector<std::vector<int>> seqs;
    for (int code = 0; code < total; ++code) {
      std::vector<int> s(len);
      int c = code;
      for (int i = 0; i < len; ++i, c /= 3) s[i] = c % 3;
      seqs.push_back(std::move(s));
    }
    for (const auto& a : seqs) {
      const auto la = as_labels(a);
      for (const auto& b : seqs) {
        const double diff = std::abs(cohen_kappa(la, as_labels(b)) - testing::oracle_kappa(a, b));
        worst = std::max(worst, diff);
        ++pairs;
      }
    }
  }
  const double identical = cohen_kappa({"A", "B", "C", "A"}, {"A", "B", "C", "A"});
  const double fixture = cohen_kappa({"A", "A", "B", "B"}, {"A", "B", "B", "B"});
  const auto detail =
      fmt("%zu exhaustive pairs, max |diff| %.3g (tol %.0e); identical %.12g; fixture %.12g",
          pairs, worst, kKappaTolerance, identical, fixture);
  const bool ok = worst <= kKappaTolerance && identical == 1.0 &&
                  std::abs(fixture - 0.5) <= kKappaTolerance;
  return ok ? pass(detail) : fail(detail);
}

Result rho_oracle() {
  std::mt19937_64 rng(1234);
  LabelEncoding enc;
  for (int i = 0; i < 5; ++i) enc[std::string(1, static_cast<char>('A' + i))] = i;
  std::size_t compared = 0, undefined = 0, disagreements = 0;
  double worst = 0.0;
  while (compared + undefined < 1000) {
    const int n = 2 + static_cast<int>(rng() % 9);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng() % 5);
      b[i] = static_cast<int>(rng() % 5);
    }
    const auto expected = testing::oracle_rho(a, b);
    std::optional<double> got;
    try {
      got = spearman_rho(as_labels(a), as_labels(b), enc);
    } catch (const ContractError&) {
    }
    if (expected.has_value() != got.has_value()) {
      ++disagreements;
    } else if (expected) {
      worst = std::max(worst, std::abs(*got - *expected));
    }
    expected ? ++compared : ++undefined;
  }
  const double up = spearman_rho(as_labels({0, 1, 2, 3, 4}), as_labels({0, 1, 1, 3, 4}), enc);
  const double down = spearman_rho(as_labels({0, 1, 2, 3, 4}), as_labels({4, 3, 2, 1, 0}), enc);
  const double plus = spearman_rho(as_labels({0, 1, 2, 3}), as_labels({1, 2, 3, 4}), enc);
  const auto detail = fmt(
      "%zu defined + %zu undefined sequences, max |diff| %.3g (tol %.0e), %zu definedness "
      "disagreements; monotone +%.12g / %.12g",
      compared, undefined, worst, kRhoTolerance, disagreements, plus, down);
  const bool ok = worst <= kRhoTolerance && disagreements == 0 &&
                  std::abs(plus - 1.0) <= kRhoTolerance &&
                  std::abs(down + 1.0) <= kRhoTolerance && up < 1.0 && up > 0.9;
  return ok ? pass(detail) : fail(detail);
}

Result rate_arithmetic() {
  MetricsCounts c;
  c.n_total = 200;
  c.n_hc = 120;
  c.n_cb = 45;
  c.n_h = 3;
  c.n_nr = 0;
  const auto con = compute_rates(c, PromptTier::Constrained);
  MetricsCounts semi_c = c;
  semi_c.n_h = 0;
  semi_c.n_nr = 10;
  const auto semi = compute_rates(semi_c, PromptTier::SemiConstrained);
  MetricsCounts open_c;
  open_c.n_total = 200;
  open_c.n_nr = 150;
  const auto open = compute_rates(open_c, PromptTier::OpenEnded);

  auto cell = [](const std::optional<Percent>& p) { return p ? p->str() : std::string("-"); };
  const bool values = cell(con.hcr) == "60.00" && cell(con.cbr) == "37.50" &&
                      cell(con.hr) == "1.50";
  const bool dashes = cell(con.nrr) == "-" && cell(semi.hr) == "-" && cell(semi.nrr) != "-" &&
                      cell(open.cbr) == "-" && cell(open.hr) == "-" && cell(open.hcr) == "-" &&
                      cell(open.nrr) != "-";
  const auto detail = "HCR " + cell(con.hcr) + " / CBR " + cell(con.cbr) + " / HR " +
                      cell(con.hr) + "; const NRR " + cell(con.nrr) + ", semi HR " +
                      cell(semi.hr) + ", open CBR/HR/HCR " + cell(open.cbr) + "/" +
                      cell(open.hr) + "/" + cell(open.hcr);
  return values && dashes ? pass(detail) : fail(detail);
}

Result parser_corpus() {
  const auto corpus = testing::load_parser_corpus();
  std::size_t mismatches = 0;
  std::string first;
  for (const auto& c : corpus) {
    const auto why = testing::parser_case_mismatch(c, parse(c.id, c.text, c.tier, c.options));
    if (!why.empty() && mismatches++ == 0) first = c.id + ": " + why;
  }
  auto has = [&](const std::string& id) {
    for (const auto& c : corpus) {
      if (c.id == id) return true;
    }
    return false;
  };
  const bool coverage = corpus.size() >= 30 && has("cb_stake_reasoning");
  const auto detail = fmt("%zu cases, %zu mismatches", corpus.size(), mismatches);
  if (!coverage) return fail(detail + "; corpus too small or missing the CB example");
  return mismatches == 0 ? pass(detail) : fail(detail + "; first: " + first);
}

Result similarity_summary() {
  const auto cases = testing::load_similarity_corpus();
  std::vector<SimilarityPair> pairs;
  // Exact rational oracle: scores are p/q, so the fraction and mean are
  // exact and the variance is evaluated in long double from the fractions.
  long double sum = 0;
  std::size_t above = 0;
  std::vector<long double> exact;
  for (const auto& c : cases) {
    SimilarityPair p;
    p.instance_id = c.instance_id;
    p.source_label = c.source_label;
    p.target_label = c.target_label;
    p.score = lexical_similarity(c.source_label, c.target_label);
    pairs.push_back(p);
    exact.push_back(static_cast<long double>(c.num) / c.den);
    sum += exact.back();
    above += c.num * 10 > c.den * 7;  // strict, in integers
  }
  const long double mean = sum / exact.size();
  long double var = 0;
  for (auto x : exact) var += (x - mean) * (x - mean);
  const double sigma = static_cast<double>(std::sqrt(var / exact.size()));
  const double fraction = static_cast<double>(above) / static_cast<double>(exact.size());

  const auto r = summarize(pairs, kDefaultSimilarityThreshold);
  bool boundary = false;
  for (const auto& c : cases) boundary = boundary || c.num * 10 == c.den * 7;
  const bool ok = r.n_pairs == cases.size() && r.fraction_above_threshold == fraction &&
                  std::abs(*r.mean - static_cast<double>(mean)) <= kSimilarityTolerance &&
                  std::abs(*r.std_dev - sigma) <= kSimilarityTolerance && boundary;
  const auto detail =
      fmt("%zu pairs; fraction %.6f vs %.6f; mean %.15f vs %.15f; sigma %.15f vs %.15f "
          "(tol %.0e); boundary pair at 0.7 %s",
          cases.size(), r.fraction_above_threshold.value_or(-1), fraction, r.mean.value_or(-1),
          static_cast<double>(mean), r.std_dev.value_or(-1), sigma, kSimilarityTolerance,
          boundary ? "present" : "missing");
  return ok ? pass(detail) : fail(detail);
}

Result end_to_end_determinism() {
  testing::TempDir dir("accept-e2e");
  const auto data = dir.path() / "data.jsonl";
  testing::write_generic_dataset(data, 100, 10);
  std::vector<fs::path> outs = {dir.path() / "a", dir.path() / "b"};
  for (const auto& out : outs) {
    RunConfig c;
    c.dataset_path = data;
    c.output_dir = out;
    c.seed = 99;
    c.runs_per_setting = 3;
    const auto m = run(c);
    if (!m.ok()) return fail("run failed at " + m.failed_stage + ": " + m.error);
  }
  std::vector<std::string> differing;
  const std::vector<std::string> files = {"metrics.json", "similarity.json", "agreement.json",
                                          "metrics.csv",  "similarity.csv",  "agreement.csv",
                                          "report.md",    "report.json"};
  for (const auto& f : files) {
    if (read_file(outs[0] / f) != read_file(outs[1] / f)) differing.push_back(f);
  }
  if (!differing.empty()) return fail("differs: " + differing.front());
  return pass(fmt("%zu report files byte-identical across two seeded runs", files.size()));
}

Result live_replication() {
  const char* base = std::getenv("HOBSON_LIVE_BASE_URL");
  const char* model = std::getenv("HOBSON_LIVE_MODEL");
  const char* key = std::getenv("HOBSON_API_KEY");
  const char* sample = std::getenv("HOBSON_REFIND_SAMPLE");
  if (!base || !model || !key || !sample) {
    return {Verdict::Skip,
            "needs HOBSON_LIVE_BASE_URL, HOBSON_LIVE_MODEL, HOBSON_API_KEY, "
            "HOBSON_REFIND_SAMPLE"};
  }
  testing::TempDir dir("accept-live");
  RunConfig c;
  c.dataset_path = sample;
  c.dataset_format = fs::path(sample).extension() == ".jsonl" ? DatasetFormat::GenericJsonl
                                                              : DatasetFormat::RefindJson;
  c.dataset_tag = "refind";
  c.count_subset = 100;
  c.provider = ProviderMode::Live;
  c.endpoint.base_url = base;
  c.models = {model};
  c.temperatures = {0.2, 0.5};
  c.replication_profile = true;
  c.output_dir = dir.path() / "out";
  const auto m = run(c);
  if (!m.ok()) return fail("run failed at " + m.failed_stage + ": " + m.error);
  const auto bundle = load_report_bundle(c.output_dir);
  const auto md = read_file(c.output_dir / "report.md");
  const bool shaped = bundle.metrics.size() == 6 &&
                      md.find("| Prompt | Dataset | Temp | CBR% | HR% | NRR% | HCR% |") !=
                          std::string::npos;
  const auto detail = fmt("%zu metric rows, report at %s", bundle.metrics.size(),
                          (c.output_dir / "report.md").c_str());
  return shaped ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"classifier decision table", classifier_table},
      {"estimator recovery", estimator_recovery},
      {"kappa oracle", kappa_oracle},
      {"rho oracle", rho_oracle},
      {"rate arithmetic and N/A pattern", rate_arithmetic},
      {"parser corpus", parser_corpus},
      {"similarity summary", similarity_summary},
      {"end-to-end determinism", end_to_end_determinism},
      {"live replication readiness", live_replication},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("threw: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Skip ? "SKIP" : "FAIL";
    failures += o.verdict == Verdict::Fail;
    std::printf("[%s] %zu %s: %s\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
