#include "hobson/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "hobson/assets.hpp"
#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  h ^= 0xff;  // field separator
  h *= kFnvPrime;
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view instance_id,
                          PromptTier tier, int run_index) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, std::to_string(seed));
  fnv_mix(h, instance_id);
  fnv_mix(h, to_string(tier));
  fnv_mix(h, std::to_string(run_index));
  return h;
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform(rng) * static_cast<double>(n));
}

std::string_view suffix_of(std::string_view label) {
  const auto colon = label.rfind(':');
  return colon == std::string_view::npos ? label : label.substr(colon + 1);
}

// Pool labels the parser could not confuse with an offered option.
std::vector<std::string> usable_pool(const AnnotatorProfile& profile,
                                     const std::vector<std::string>& options) {
  std::vector<std::string> pool;
  for (const auto& label : profile.novel_label_pool) {
    const bool clash = std::any_of(options.begin(), options.end(), [&](const auto& o) {
      return o == label || suffix_of(o) == label;
    });
    if (!clash) pool.push_back(label);
  }
  return pool;
}

const char* kNoiseEcho =
    "Given the following sentence: {highlighted_text}, with marked entities at "
    "specific positions as highlighted phrases: {subject} and {object}. To "
    "determine the appropriate relation class, let's think step by step.";

std::string noise_text(std::mt19937_64& rng) {
  switch (pick(rng, 3)) {
    case 0:
      return "Please specify the title example you would like me to work with.";
    case 1:
      return kNoiseEcho;
    default:
      return "I'm sorry, could you please clarify which sentence you would like "
             "me to analyze?";
  }
}

std::string hallucinate_text(std::mt19937_64& rng, const std::string& label) {
  if (pick(rng, 2) == 0) {
    return "Step 1: The sentence links the subject entity to the object entity.\n"
           "Step 2: I will name the relation that the sentence states.\n"
           "Answer: " + label;
  }
  return "The subject entity is tied to the object entity in this sentence.\n"
         "The relation is " + label + ".";
}

std::string hc_plain_text() {
  return "Step 1: The subject entity and the object entity are both mentioned.\n"
         "Step 2: None of the provided options describes how they are connected.\n"
         "Answer: no_relation";
}

std::string cb_text(const std::string& first, const std::string* second) {
  std::string text =
      "Step 1: The sentence describes a link between the subject entity and the "
      "object entity.\nStep 2: A more accurate relation like " + first;
  if (second != nullptr) {
    text += " or " + *second + " would be preferable, but neither is among the options.";
  } else {
    text += " would be preferable, but it is not among the options.";
  }
  text += "\nRelation: no_relation";
  return text;
}

std::string assert_text(const std::string& option) {
  return "Step 1: The sentence states how the subject entity relates to the "
         "object entity.\nStep 2: The option '" + option +
         "' fits this statement.\nRelation: " + option;
}

std::string new_relation_text(const std::string& label) {
  return "Step 1: The sentence states how the subject entity relates to the "
         "object entity.\nStep 2: I will name that relation directly.\n"
         "Answer: " + label;
}

std::string dont_know_text() {
  return "Step 1: The sentence mentions the subject entity and the object entity.\n"
         "Step 2: It does not say enough to decide how they are related.\n"
         "Answer: dont_know";
}

std::string conservative_text() {
  return "Step 1: The sentence mentions the subject entity and the object entity.\n"
         "Step 2: Nothing in it connects the two.\n"
         "Answer: no_relation";
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0) || p > 1.0) {
    throw ContractError(std::string("probability out of range: ") + name);
  }
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Noise:
      return "noise";
    case Outcome::Hallucinate:
      return "hallucinate";
    case Outcome::HcPlain:
      return "hc_plain";
    case Outcome::Cb:
      return "cb";
    case Outcome::Assert:
      return "assert";
    case Outcome::NewRelation:
      return "new_relation";
    case Outcome::DontKnow:
      return "dont_know";
    case Outcome::Conservative:
      return "conservative";
  }
  return "noise";
}

AnnotatorProfile AnnotatorProfile::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("annotator profile must be a JSON object");
  AnnotatorProfile p;
  try {
    p.seed = doc.value("seed", std::uint64_t{0});
    p.p_noise = doc.value("p_noise", 0.0);
    if (doc.contains("constrained")) {
      const json& c = doc["constrained"];
      p.constrained.p_hallucinate = c.value("p_hallucinate", 0.0);
      p.constrained.p_hc_plain = c.value("p_hc_plain", 0.0);
      p.constrained.p_cb = c.value("p_cb", 0.0);
      p.constrained.p_assert = c.value("p_assert", 0.0);
    }
    if (doc.contains("semi_constrained")) {
      const json& s = doc["semi_constrained"];
      p.semi.p_nr = s.value("p_nr", 0.0);
      p.semi.p_hc_plain = s.value("p_hc_plain", 0.0);
      p.semi.p_cb = s.value("p_cb", 0.0);
      p.semi.p_assert = s.value("p_assert", 0.0);
      p.semi.p_dont_know = s.value("p_dont_know", 0.0);
    }
    if (doc.contains("open_ended")) {
      const json& o = doc["open_ended"];
      p.open.p_nr = o.value("p_nr", 0.0);
      p.open.p_conservative = o.value("p_conservative", 0.0);
      p.open.p_dont_know = o.value("p_dont_know", 0.0);
    }
    if (doc.contains("novel_label_pool")) {
      p.novel_label_pool = doc["novel_label_pool"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed annotator profile: ") + e.what());
  }
  p.validate();
  return p;
}

AnnotatorProfile AnnotatorProfile::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read annotator profile: " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw InputError("profile is not valid JSON: " + path.string());
  return from_json(doc);
}

AnnotatorProfile AnnotatorProfile::builtin() {
  return from_json(json::parse(assets::kProfileDefault));
}

void AnnotatorProfile::validate() const {
  check_probability(p_noise, "p_noise");
  for (PromptTier tier : kAllTiers) {
    double sum = 0.0;
    for (const auto& [outcome, p] : distribution(tier)) {
      check_probability(p, std::string(to_string(outcome)).c_str());
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ContractError("probabilities for " + std::string(to_string(tier)) +
                          " do not sum to 1");
    }
  }
  if (novel_label_pool.empty()) throw ContractError("novel label pool is empty");
  std::set<std::string> seen;
  for (const auto& label : novel_label_pool) {
    if (!is_canonical_label(label) || is_reserved_label(label)) {
      throw ContractError("invalid novel pool label: " + label);
    }
    if (!seen.insert(label).second) {
      throw ContractError("duplicate novel pool label: " + label);
    }
  }
}

void AnnotatorProfile::validate_against(const OptionRegistry& registry) const {
  for (const auto& option : registry.all_labels()) {
    for (const auto& label : novel_label_pool) {
      if (option == label || suffix_of(option) == label) {
        throw ContractError("novel pool label " + label + " collides with option " +
                            option);
      }
    }
  }
}

std::vector<std::pair<Outcome, double>> AnnotatorProfile::distribution(
    PromptTier tier) const {
  std::vector<std::pair<Outcome, double>> d = {{Outcome::Noise, p_noise}};
  switch (tier) {
    case PromptTier::Constrained:
      d.insert(d.end(), {{Outcome::Hallucinate, constrained.p_hallucinate},
                         {Outcome::HcPlain, constrained.p_hc_plain},
                         {Outcome::Cb, constrained.p_cb},
                         {Outcome::Assert, constrained.p_assert}});
      break;
    case PromptTier::SemiConstrained:
      d.insert(d.end(), {{Outcome::NewRelation, semi.p_nr},
                         {Outcome::HcPlain, semi.p_hc_plain},
                         {Outcome::Cb, semi.p_cb},
                         {Outcome::Assert, semi.p_assert},
                         {Outcome::DontKnow, semi.p_dont_know}});
      break;
    case PromptTier::OpenEnded:
      d.insert(d.end(), {{Outcome::NewRelation, open.p_nr},
                         {Outcome::Conservative, open.p_conservative},
                         {Outcome::DontKnow, open.p_dont_know}});
      break;
  }
  return d;
}

json to_json(const AnnotatorProfile& p) {
  return {
      {"seed", p.seed},
      {"p_noise", p.p_noise},
      {"constrained",
       {{"p_hallucinate", p.constrained.p_hallucinate},
        {"p_hc_plain", p.constrained.p_hc_plain},
        {"p_cb", p.constrained.p_cb},
        {"p_assert", p.constrained.p_assert}}},
      {"semi_constrained",
       {{"p_nr", p.semi.p_nr},
        {"p_hc_plain", p.semi.p_hc_plain},
        {"p_cb", p.semi.p_cb},
        {"p_assert", p.semi.p_assert},
        {"p_dont_know", p.semi.p_dont_know}}},
      {"open_ended",
       {{"p_nr", p.open.p_nr},
        {"p_conservative", p.open.p_conservative},
        {"p_dont_know", p.open.p_dont_know}}},
      {"novel_label_pool", p.novel_label_pool},
  };
}

SyntheticResponse generate_response(std::string_view instance_id, PromptTier tier,
                                    std::span<const std::string> options,
                                    const AnnotatorProfile& profile, int run_index) {
  std::vector<std::string> offered;
  if (tier != PromptTier::OpenEnded) {
    for (const auto& o : options) {
      if (!is_reserved_label(o)) offered.push_back(o);
    }
  }

  std::mt19937_64 rng(stream_seed(profile.seed, instance_id, tier, run_index));
  const double u = uniform(rng);
  const auto dist = profile.distribution(tier);
  Outcome outcome = dist.back().first;
  double cumulative = 0.0;
  for (const auto& [o, p] : dist) {
    cumulative += p;
    if (u < cumulative) {
      outcome = o;
      break;
    }
  }

  const std::vector<std::string> pool = usable_pool(profile, offered);
  auto novel = [&]() -> const std::string& {
    if (pool.empty()) {
      throw ContractError("every novel pool label collides with the options of " +
                          std::string(instance_id));
    }
    return pool[pick(rng, pool.size())];
  };

  SyntheticResponse out;
  out.outcome = outcome;
  switch (outcome) {
    case Outcome::Noise:
      out.response.text = noise_text(rng);
      break;
    case Outcome::Hallucinate:
      out.label = novel();
      out.response.text = hallucinate_text(rng, out.label);
      break;
    case Outcome::HcPlain:
      out.label = std::string(kNoRelation);
      out.response.text = hc_plain_text();
      break;
    case Outcome::Cb: {
      out.label = novel();
      const std::string* second = nullptr;
      if (pool.size() > 1 && pick(rng, 2) == 0) {
        const std::string& other = novel();
        if (other != out.label) second = &other;
      }
      out.response.text = cb_text(out.label, second);
      break;
    }
    case Outcome::Assert:
      if (offered.empty()) {
        throw ContractError("assert outcome needs at least one option for " +
                            std::string(instance_id));
      }
      out.label = offered[pick(rng, offered.size())];
      out.response.text = assert_text(out.label);
      break;
    case Outcome::NewRelation:
      out.label = novel();
      out.response.text = new_relation_text(out.label);
      break;
    case Outcome::DontKnow:
      out.label = std::string(kDontKnow);
      out.response.text = dont_know_text();
      break;
    case Outcome::Conservative:
      out.label = std::string(kNoRelation);
      out.response.text = conservative_text();
      break;
  }
  out.response.instance_id = std::string(instance_id);
  out.response.tier = tier;
  out.response.run_index = run_index;
  out.response.provider = "synthetic";
  return out;
}

OutcomeFlags expected_flags(Outcome outcome) {
  OutcomeFlags f;
  switch (outcome) {
    case Outcome::Noise:
      f.noise = true;
      break;
    case Outcome::Hallucinate:
      f.hallucination = true;
      break;
    case Outcome::HcPlain:
      f.hobsons_choice = true;
      break;
    case Outcome::Cb:
      f.hobsons_choice = true;
      f.conservative_bias = true;
      break;
    case Outcome::NewRelation:
      f.new_relation = true;
      break;
    case Outcome::DontKnow:
      f.dont_know = true;
      break;
    case Outcome::Assert:
    case Outcome::Conservative:
      break;
  }
  return f;
}

ExpectedCounts expected_counts(const AnnotatorProfile& profile, PromptTier tier,
                               std::int64_t n) {
  if (n < 1) throw ContractError("expected counts need n >= 1");
  ExpectedCounts e;
  const double dn = static_cast<double>(n);
  for (const auto& [outcome, p] : profile.distribution(tier)) {
    const OutcomeFlags f = expected_flags(outcome);
    const double c = dn * p;
    if (f.noise) {
      e.n_noise += c;
      continue;
    }
    e.n_total += c;
    if (f.hobsons_choice) e.n_hc += c;
    if (f.conservative_bias) e.n_cb += c;
    if (f.hallucination) e.n_h += c;
    if (f.new_relation) e.n_nr += c;
    if (f.dont_know) e.n_dont_know += c;
  }
  return e;
}

SyntheticProvider::SyntheticProvider(AnnotatorProfile profile)
    : profile_(std::move(profile)) {
  profile_.validate();
}

std::string SyntheticProvider::send(const CompletionRequest& request) {
  return generate_response(request.prompt.instance_id, request.prompt.tier,
                           request.prompt.options_used, profile_, request.run_index)
      .response.text;
}

}  // namespace hobson
