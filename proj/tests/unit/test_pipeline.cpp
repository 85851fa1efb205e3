#include <doctest.h>

#include <fstream>

#include "hobson/error.hpp"
#include "hobson/pipeline.hpp"
#include "hobson/serialization.hpp"
#include "support/fixtures.hpp"

using namespace hobson;
using hobson::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig synthetic_config(const fs::path& dataset, const fs::path& out) {
  RunConfig c;
  c.dataset_path = dataset;
  c.output_dir = out;
  c.runs_per_setting = 2;
  c.parallelism = 1;
  return c;
}

const StageRecord& stage(const RunManifest& m, const std::string& name) {
  for (const auto& s : m.stages) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no stage " + name);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("provider mode and scorer names") {
  CHECK(parse_provider_mode("cache-only") == ProviderMode::CacheOnly);
  CHECK(parse_provider_mode(to_string(ProviderMode::Live)) == ProviderMode::Live);
  CHECK(parse_scorer_kind("judge") == ScorerKind::Judge);
  CHECK_THROWS(parse_provider_mode("offline"));
  CHECK_THROWS(parse_scorer_kind("bleu"));
}

TEST_CASE("config round-trips and digests deterministically") {
  RunConfig c;
  c.dataset_path = "data.jsonl";
  c.models = {"a", "b"};
  c.seed = 9;
  c.scorer = ScorerKind::Lexical;
  c.similarity_threshold = 0.6;
  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.digest() == c.digest());
  auto changed = c;
  changed.temperatures = {0.2};
  CHECK(changed.digest() != c.digest());
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(RunConfig::from_json({{"dataset", "x"}, {"colour", "red"}}), InputError);
  RunConfig c;
  c.dataset_path = "x";
  c.temperatures = {0.2, 0.2};
  CHECK_THROWS(c.validate());
  c.temperatures = {2.5};
  CHECK_THROWS(c.validate());
  c.temperatures = {0.2, 0.3};
  c.replication_profile = true;
  CHECK_THROWS(c.validate());
  c.temperatures = {0.2};
  CHECK_NOTHROW(c.validate());
  c.replication_profile = false;
  c.provider = ProviderMode::Live;
  CHECK_THROWS(c.validate());
  c.endpoint.base_url = "http://localhost:1";
  CHECK_NOTHROW(c.validate());
  c.provider = ProviderMode::Synthetic;
  c.scorer = ScorerKind::Judge;
  CHECK_THROWS(c.validate());
}

TEST_CASE("config file paths resolve relative to the file") {
  TempDir dir("cfg");
  fs::create_directories(dir.path() / "conf");
  std::ofstream(dir.path() / "conf" / "run.json")
      << R"({"dataset": "../data.jsonl", "registry": "reg.json", "output_dir": "out"})";
  const auto c = RunConfig::from_file(dir.path() / "conf" / "run.json");
  CHECK(c.dataset_path == dir.path() / "conf" / "../data.jsonl");
  CHECK(*c.registry_path == dir.path() / "conf" / "reg.json");
  CHECK(c.output_dir == "out");
}

TEST_CASE("200 instances x 2 runs x 2 temperatures") {
  TempDir dir("pipe");
  const auto data = dir.path() / "data.jsonl";
  hobson::testing::write_generic_dataset(data, 200, 5);
  auto config = synthetic_config(data, dir.path() / "out");
  const auto m = run(config);
  REQUIRE_MESSAGE(m.ok(), m.error);
  CHECK(stage(m, "corpus").counts.at("loaded") == 205);
  CHECK(stage(m, "corpus").counts.at("selected") == 200);
  CHECK(stage(m, "prompts").counts.at("prompts") == 600);
  CHECK(stage(m, "provider").counts.at("responses") == 200 * 3 * 2 * 2);
  CHECK(stage(m, "provider").counts.at("failures") == 0);
  const auto& parse = stage(m, "parse").counts;
  CHECK(parse.at("ok") + parse.at("no_conclusion") + parse.at("noise") == 2400);
  CHECK(stage(m, "classify").counts.at("synthetic_mismatches") == 0);

  const auto bundle = load_report_bundle(dir.path() / "out");
  CHECK(bundle.metrics.size() == 3 * 2);
  std::int64_t pooled = 0;
  for (const auto& r : bundle.metrics) pooled += r.counts.n_total + r.counts.n_noise;
  CHECK(pooled == 2400);
  CHECK(bundle.agreement.size() == 3 * 2);
  for (const auto& a : bundle.agreement) CHECK(a.per_pair.size() == 1);
  CHECK_FALSE(bundle.similarity.empty());
  for (const char* f : {"manifest.json", "report.md", "metrics.csv", "parsed.jsonl",
                        "verdicts.jsonl", "similarity_pairs.jsonl", "ground_truth.jsonl"}) {
    CHECK_MESSAGE(fs::exists(dir.path() / "out" / f), f);
  }

  // The manifest on disk matches what run() returned.
  const auto disk = RunManifest::from_json(
      nlohmann::json::parse(read_file(dir.path() / "out" / "manifest.json")));
  CHECK(disk.status == "complete");
  CHECK(disk.stages.size() == m.stages.size());
  CHECK(disk.stages.back().chain_digest == m.stages.back().chain_digest);
}

TEST_CASE("rerun is served from cache with identical outputs") {
  TempDir dir("resume");
  const auto data = dir.path() / "data.jsonl";
  hobson::testing::write_generic_dataset(data, 30);
  auto config = synthetic_config(data, dir.path() / "a");
  config.cache_dir = dir.path() / "cache";
  const auto first = run(config);
  REQUIRE(first.ok());
  config.output_dir = dir.path() / "b";
  const auto second = run(config);
  REQUIRE(second.ok());
  CHECK(second.provider_stats.provider_calls == 0);
  CHECK(second.provider_stats.cache_hits == first.provider_stats.provider_calls);
  for (const char* f : {"metrics.json", "similarity.json", "agreement.json", "parsed.jsonl"}) {
    CHECK_MESSAGE(read_file(dir.path() / "a" / f) == read_file(dir.path() / "b" / f), f);
  }

  config.provider = ProviderMode::CacheOnly;
  config.output_dir = dir.path() / "c";
  CHECK(run(config).ok());
}

TEST_CASE("cache-only run with a cold cache fails at the provider stage") {
  TempDir dir("cold");
  const auto data = dir.path() / "data.jsonl";
  hobson::testing::write_generic_dataset(data, 5);
  auto config = synthetic_config(data, dir.path() / "out");
  config.provider = ProviderMode::CacheOnly;
  config.cache_dir = dir.path() / "empty-cache";
  const auto m = run(config);
  CHECK_FALSE(m.ok());
  CHECK(m.failed_stage == "provider");
  CHECK(m.error.find("cache miss") != std::string::npos);
  int completed = 0;
  for (const auto& s : m.stages) completed += s.completed;
  CHECK(completed == 3);
}

TEST_CASE("a missing dataset fails at the corpus stage") {
  TempDir dir("missing");
  const auto m = run(synthetic_config(dir.path() / "none.jsonl", dir.path() / "out"));
  CHECK_FALSE(m.ok());
  CHECK(m.failed_stage == "corpus");
}

TEST_CASE("single run skips agreement") {
  TempDir dir("single");
  const auto data = dir.path() / "data.jsonl";
  hobson::testing::write_generic_dataset(data, 10);
  auto config = synthetic_config(data, dir.path() / "out");
  config.runs_per_setting = 1;
  config.temperatures = {0.2};
  REQUIRE(run(config).ok());
  const auto bundle = load_report_bundle(dir.path() / "out");
  CHECK(bundle.agreement.empty());
  CHECK(bundle.metrics.size() == 3);
}

}
