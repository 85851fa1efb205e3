#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hobson/corpus.hpp"
#include "hobson/parser.hpp"
#include "hobson/prompt.hpp"

namespace hobson::testing {

std::filesystem::path fixture_path(const std::string& name);

// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

OptionSet make_options(const std::vector<std::string>& labels,
                       std::string subj_type = "ORG",
                       std::string obj_type = "ORG");

struct ParserCase {
  std::string id;
  PromptTier tier = PromptTier::Constrained;
  OptionSet options;
  std::string text;
  ParseStatus status = ParseStatus::Ok;
  std::optional<std::string> concluded_label;
  std::vector<std::string> suggestions;
};

std::vector<ParserCase> load_parser_corpus();

// Empty string when `parsed` matches the case, otherwise a description.
std::string parser_case_mismatch(const ParserCase& c, const ParsedResponse& parsed);

struct SimilarityCase {
  std::string instance_id;
  std::string source_label;
  std::string target_label;
  std::int64_t num = 0;
  std::int64_t den = 1;
};

std::vector<SimilarityCase> load_similarity_corpus();

// Writes `n` ORG:ORG no_relation records plus `n_other` records with a
// different gold label, as generic jsonl.
void write_generic_dataset(const std::filesystem::path& path, int n, int n_other = 0);

// Reference agreement statistics, computed independently of the library.
// Kappa uses exact integer arithmetic; rho ranks by pairwise counting.
double oracle_kappa(const std::vector<int>& a, const std::vector<int>& b);
std::optional<double> oracle_rho(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace hobson::testing
