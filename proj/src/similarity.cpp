#include "hobson/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_map>

#include "hobson/assets.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

std::set<std::string> label_words(const std::string& label) {
  std::set<std::string> words;
  std::string current;
  for (char c : label) {
    if (c == '_' || c == ':') {
      if (!current.empty()) words.insert(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) words.insert(std::move(current));
  return words;
}

std::string humanize(const std::string& label) {
  std::string out = label;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

}  // namespace

CbJoin join_cb_pairs(const std::vector<ConstrainedOutcome>& constrained,
                     const std::vector<ParsedResponse>& other_run,
                     PromptTier target_tier) {
  if (target_tier == PromptTier::Constrained) {
    throw ContractError("similarity target tier must be semi-constrained or open-ended");
  }
  std::unordered_map<std::string, const ParsedResponse*> by_id;
  for (const auto& p : other_run) by_id.emplace(p.instance_id, &p);

  CbJoin join;
  for (const auto& c : constrained) {
    if (!c.verdict.is_conservative_bias) continue;
    const std::string& id = c.verdict.instance_id;
    if (c.verdict.novel_suggestions.empty()) {
      join.unmatched.push_back({id, "CB verdict without a novel suggestion"});
      continue;
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      join.unmatched.push_back({id, "no counterpart reply"});
      continue;
    }
    const ParsedResponse& other = *it->second;
    if (other.status == ParseStatus::Noise) {
      join.unmatched.push_back({id, "counterpart reply is noise"});
      continue;
    }
    if (!other.concluded_label) {
      join.unmatched.push_back({id, "counterpart reply has no conclusion"});
      continue;
    }
    std::string target;
    if (*other.concluded_label == kDontKnow) {
      join.unmatched.push_back({id, "counterpart concluded dont_know"});
      continue;
    }
    if (*other.concluded_label == kNoRelation) {
      for (const auto& s : other.suggested_relations) {
        if (!is_reserved_label(s)) {
          target = s;
          break;
        }
      }
      if (target.empty()) {
        join.unmatched.push_back({id, "counterpart concluded no_relation without a suggestion"});
        continue;
      }
    } else {
      target = *other.concluded_label;
    }
    SimilarityPair pair;
    pair.instance_id = id;
    pair.source_label = c.verdict.novel_suggestions.front();
    pair.target_label = std::move(target);
    pair.target_tier = target_tier;
    join.pairs.push_back(std::move(pair));
  }
  return join;
}

double lexical_similarity(const std::string& a, const std::string& b) {
  const auto wa = label_words(a);
  const auto wb = label_words(b);
  std::size_t common = 0;
  for (const auto& w : wa) common += wb.count(w);
  const std::size_t uni = wa.size() + wb.size() - common;
  if (uni == 0) return 0.0;
  return static_cast<double>(common) / static_cast<double>(uni);
}

ScoreResult LexicalScorer::score(const std::string& a, const std::string& b,
                                 const std::string&) {
  return {lexical_similarity(a, b), {}};
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ContractError("cosine similarity of mismatched vectors");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

EmbeddingScorer::EmbeddingScorer(std::shared_ptr<EmbeddingClient> client)
    : client_(std::move(client)) {
  if (!client_) throw ContractError("embedding scorer needs a client");
}

ScoreResult EmbeddingScorer::score(const std::string& a, const std::string& b,
                                   const std::string& context) {
  auto text = [&](const std::string& label) {
    if (context.empty()) return humanize(label);
    return humanize(label) + " (in: " + context + ")";
  };
  try {
    const auto vectors = client_->embed({text(a), text(b)});
    return {cosine_similarity(vectors.at(0), vectors.at(1)), {}};
  } catch (const CompletionError& e) {
    return {std::nullopt, e.what()};
  } catch (const ContractError& e) {
    return {std::nullopt, e.what()};
  }
}

std::optional<double> parse_judge_score(const std::string& reply) {
  static const std::regex number(R"([-+]?(\d+(\.\d*)?|\.\d+))");
  std::smatch m;
  if (!std::regex_search(reply, m, number)) return std::nullopt;
  return std::clamp(std::stod(m.str()), 0.0, 1.0);
}

const std::string& default_judge_template() {
  static const std::string tmpl = assets::kJudgeTemplate;
  return tmpl;
}

JudgeScorer::JudgeScorer(std::shared_ptr<Gateway> gateway, std::string model,
                         double temperature, std::string judge_template)
    : gateway_(std::move(gateway)),
      model_(std::move(model)),
      temperature_(temperature),
      template_(judge_template.empty() ? default_judge_template()
                                       : std::move(judge_template)) {
  if (!gateway_) throw ContractError("judge scorer needs a gateway");
  if (model_.empty()) throw ContractError("judge scorer needs a model");
}

std::string JudgeScorer::render_prompt(const std::string& a, const std::string& b,
                                       const std::string& context) const {
  const std::string ctx = context.empty() ? "" : " Sentence: '" + context + "'.";
  return substitute_placeholders(template_,
                                 {{"label_a", a}, {"label_b", b}, {"context", ctx}});
}

ScoreResult JudgeScorer::score(const std::string& a, const std::string& b,
                               const std::string& context) {
  CompletionRequest request;
  request.prompt.instance_id = "judge";
  request.prompt.text = render_prompt(a, b, context);
  request.model = model_;
  request.temperature = temperature_;
  request.max_tokens = 16;
  try {
    const RawResponse reply = gateway_->complete(request);
    if (auto s = parse_judge_score(reply.text)) return {s, {}};
    return {std::nullopt, "judge reply has no score"};
  } catch (const CompletionError& e) {
    return {std::nullopt, e.what()};
  }
}

SimilarityReport summarize(const std::vector<SimilarityPair>& pairs, double threshold,
                           SimilarityKey key) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError("similarity threshold must lie strictly between 0 and 1");
  }
  SimilarityReport r;
  r.key = std::move(key);
  r.threshold = threshold;
  std::vector<double> scores;
  for (const auto& p : pairs) {
    if (p.score) {
      scores.push_back(*p.score);
    } else {
      ++r.n_unscored;
    }
  }
  r.n_pairs = scores.size();
  if (scores.empty()) return r;
  const double n = static_cast<double>(scores.size());
  double sum = 0.0;
  std::size_t above = 0;
  for (double s : scores) {
    sum += s;
    above += s > threshold;
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  r.fraction_above_threshold = static_cast<double>(above) / n;
  r.mean = mean;
  r.std_dev = std::sqrt(var / n);
  return r;
}

}  // namespace hobson
