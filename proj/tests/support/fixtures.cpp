#include "support/fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hobson/label.hpp"

namespace hobson::testing {

namespace fs = std::filesystem;

fs::path fixture_path(const std::string& name) { return fs::path(HOBSON_FIXTURE_DIR) / name; }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("hobson-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

OptionSet make_options(const std::vector<std::string>& labels, std::string subj_type,
                       std::string obj_type) {
  OptionSet set;
  set.entity_pair = {std::move(subj_type), std::move(obj_type)};
  for (const auto& l : labels) set.relations.push_back(normalize_label(l));
  return set;
}

namespace {

nlohmann::json load_json(const std::string& name) {
  std::ifstream in(fixture_path(name));
  if (!in) throw std::runtime_error("missing fixture " + name);
  return nlohmann::json::parse(in);
}

}  // namespace

std::vector<ParserCase> load_parser_corpus() {
  std::vector<ParserCase> out;
  for (const auto& row : load_json("parser_corpus.json")) {
    ParserCase c;
    c.id = row.at("id").get<std::string>();
    c.tier = parse_tier(row.at("tier").get<std::string>());
    c.options = make_options(row.value("options", std::vector<std::string>{}));
    c.text = row.at("text").get<std::string>();
    const auto& e = row.at("expected");
    c.status = parse_status_from_string(e.at("status").get<std::string>());
    if (e.contains("concluded_label") && !e["concluded_label"].is_null()) {
      c.concluded_label = e["concluded_label"].get<std::string>();
    }
    c.suggestions = e.value("suggested_relations", std::vector<std::string>{});
    out.push_back(std::move(c));
  }
  return out;
}

std::string parser_case_mismatch(const ParserCase& c, const ParsedResponse& parsed) {
  std::ostringstream why;
  if (parsed.status != c.status) {
    why << "status " << to_string(parsed.status) << " != " << to_string(c.status) << "; ";
  }
  if (parsed.concluded_label != c.concluded_label) {
    why << "label " << parsed.concluded_label.value_or("<none>")
        << " != " << c.concluded_label.value_or("<none>") << "; ";
  }
  if (parsed.suggested_relations != c.suggestions) {
    why << "suggestions [";
    for (const auto& s : parsed.suggested_relations) why << s << " ";
    why << "] != [";
    for (const auto& s : c.suggestions) why << s << " ";
    why << "]";
  }
  return why.str();
}

std::vector<SimilarityCase> load_similarity_corpus() {
  std::vector<SimilarityCase> out;
  for (const auto& row : load_json("similarity_pairs.json")) {
    SimilarityCase c;
    c.instance_id = row.at("instance_id").get<std::string>();
    c.source_label = row.at("source_label").get<std::string>();
    c.target_label = row.at("target_label").get<std::string>();
    const auto frac = row.at("expected_score").get<std::string>();
    const auto slash = frac.find('/');
    c.num = std::stoll(frac.substr(0, slash));
    c.den = std::stoll(frac.substr(slash + 1));
    out.push_back(c);
  }
  return out;
}

void write_generic_dataset(const std::filesystem::path& path, int n, int n_other) {
  std::ofstream out(path);
  for (int i = 0; i < n + n_other; ++i) {
    nlohmann::json row = {
        {"id", "doc-" + std::to_string(i)},
        {"tokens", {"Firm" + std::to_string(i), "holds", "a", "stake", "in", "Target", "."}},
        {"subj_start", 0}, {"subj_end", 1}, {"obj_start", 5}, {"obj_end", 6},
        {"subj_type", "ORG"}, {"obj_type", "ORG"},
        {"relation", i < n ? "no_relation" : "org:org:shares_of"},
        {"dataset", "refind"}};
    out << row.dump() << "\n";
  }
}

double oracle_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  // kappa = (n*agree - sum ca*cb) / (n^2 - sum ca*cb), exact in integers.
  const std::int64_t n = static_cast<std::int64_t>(a.size());
  std::map<int, std::int64_t> ca, cb;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    if (a[i] == b[i]) ++agree;
  }
  std::int64_t chance = 0;
  for (const auto& [label, count] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) chance += count * it->second;
  }
  const std::int64_t den = n * n - chance;
  if (den == 0) return 1.0;
  return static_cast<double>(n * agree - chance) / static_cast<double>(den);
}

namespace {

std::vector<long double> count_ranks(const std::vector<int>& v) {
  std::vector<long double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::int64_t less = 0, equal = 0;
    for (int x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    ranks[i] = static_cast<long double>(less) + static_cast<long double>(equal + 1) / 2.0L;
  }
  return ranks;
}

}  // namespace

std::optional<double> oracle_rho(const std::vector<int>& a, const std::vector<int>& b) {
  const auto ra = count_ranks(a);
  const auto rb = count_ranks(b);
  const long double n = static_cast<long double>(a.size());
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

}  // namespace hobson::testing
