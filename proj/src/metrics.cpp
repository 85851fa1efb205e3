#include "hobson/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hobson/error.hpp"
#include "hobson/label.hpp"

namespace hobson {
namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ContractError("undefined correlation");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Percent Percent::of_ratio(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw ContractError("percentage of a non-positive total");
  if (numerator < 0) throw ContractError("negative count");
  return Percent((2 * numerator * 10000 + denominator) / (2 * denominator));
}

std::string Percent::str() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld",
                static_cast<long long>(hundredths_ / 100),
                static_cast<long long>(hundredths_ % 100));
  return buf;
}

MetricsCounts& MetricsCounts::operator+=(const MetricsCounts& o) {
  n_total += o.n_total;
  n_hc += o.n_hc;
  n_cb += o.n_cb;
  n_h += o.n_h;
  n_nr += o.n_nr;
  n_noise += o.n_noise;
  n_dont_know += o.n_dont_know;
  return *this;
}

MetricsCounts tally(const std::vector<BehaviorVerdict>& verdicts) {
  MetricsCounts c;
  if (verdicts.empty()) return c;
  const PromptTier tier = verdicts.front().tier;
  for (const auto& v : verdicts) {
    if (v.tier != tier) throw ContractError("verdicts span more than one tier");
    if (v.is_noise) {
      ++c.n_noise;
      continue;
    }
    ++c.n_total;
    c.n_hc += v.is_hobsons_choice;
    c.n_cb += v.is_conservative_bias;
    c.n_h += v.is_hallucination;
    c.n_nr += v.is_new_relation;
    c.n_dont_know += v.is_dont_know;
  }
  return c;
}

MetricsReport compute_rates(const MetricsCounts& counts, PromptTier tier,
                            ReportKey key) {
  if (counts.n_cb > counts.n_hc || counts.n_hc > counts.n_total ||
      counts.n_h > counts.n_total || counts.n_nr > counts.n_total) {
    throw ContractError("inconsistent metric counts");
  }
  MetricsReport r;
  key.tier = tier;
  r.key = std::move(key);
  r.counts = counts;
  if (counts.n_total == 0) {
    r.empty_cell = true;
    return r;
  }
  const std::int64_t total = counts.n_total;
  if (tier != PromptTier::OpenEnded) {
    r.hcr = Percent::of_ratio(counts.n_hc, total);
    if (counts.n_hc > 0) r.cbr = Percent::of_ratio(counts.n_cb, counts.n_hc);
  }
  if (tier == PromptTier::Constrained) {
    r.hr = Percent::of_ratio(counts.n_h, total);
  } else {
    r.nrr = Percent::of_ratio(counts.n_nr, total);
  }
  return r;
}

double cohen_kappa(const std::vector<std::string>& run_a,
                   const std::vector<std::string>& run_b) {
  if (run_a.empty()) throw ContractError("kappa of an empty sequence");
  if (run_a.size() != run_b.size()) throw ContractError("kappa length mismatch");
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> marginals;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < run_a.size(); ++i) {
    ++marginals[run_a[i]].first;
    ++marginals[run_b[i]].second;
    agree += run_a[i] == run_b[i];
  }
  const double n = static_cast<double>(run_a.size());
  const double p_o = static_cast<double>(agree) / n;
  double p_e = 0.0;
  for (const auto& [label, m] : marginals) {
    p_e += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  }
  // Both annotators used one and the same label throughout.
  if (marginals.size() == 1) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

LabelEncoding canonical_label_encoding(
    const std::vector<std::string>& registry_labels,
    const std::vector<std::vector<std::string>>& observed) {
  LabelEncoding enc;
  int next = 0;
  auto add = [&](const std::string& label) {
    if (enc.emplace(label, next).second) ++next;
  };
  add(std::string(kNoRelation));
  add(std::string(kDontKnow));
  for (const auto& l : registry_labels) add(l);
  for (const auto& seq : observed) {
    for (const auto& l : seq) add(l);
  }
  return enc;
}

double spearman_rho(const std::vector<std::string>& run_a,
                    const std::vector<std::string>& run_b,
                    const LabelEncoding& encoding) {
  if (run_a.size() != run_b.size()) throw ContractError("rho length mismatch");
  if (run_a.size() < 2) throw ContractError("rho needs at least two items");
  auto encode = [&](const std::vector<std::string>& seq) {
    std::vector<double> out;
    out.reserve(seq.size());
    for (const auto& l : seq) {
      auto it = encoding.find(l);
      if (it == encoding.end()) throw ContractError("label missing from encoding: " + l);
      out.push_back(it->second);
    }
    return out;
  };
  return pearson(average_ranks(encode(run_a)), average_ranks(encode(run_b)));
}

AgreementReport compute_agreement(const ReportKey& key,
                                  const std::map<int, RunLabels>& runs,
                                  const LabelEncoding& encoding) {
  AgreementReport report;
  report.key = key;
  for (auto a = runs.begin(); a != runs.end(); ++a) {
    for (auto b = std::next(a); b != runs.end(); ++b) {
      std::vector<std::string> la, lb;
      for (const auto& [id, label] : a->second) {
        auto it = b->second.find(id);
        if (it == b->second.end()) continue;
        la.push_back(label);
        lb.push_back(it->second);
      }
      if (la.empty()) continue;
      RunPairAgreement pair;
      pair.run_a = a->first;
      pair.run_b = b->first;
      pair.n_items = la.size();
      pair.kappa = cohen_kappa(la, lb);
      try {
        pair.rho = spearman_rho(la, lb, encoding);
      } catch (const ContractError&) {
        pair.rho.reset();
      }
      report.per_pair.push_back(pair);
    }
  }
  for (const auto& p : report.per_pair) {
    report.kappa_min = std::min(report.kappa_min.value_or(p.kappa), p.kappa);
    report.kappa_max = std::max(report.kappa_max.value_or(p.kappa), p.kappa);
    if (p.rho) {
      report.rho_min = std::min(report.rho_min.value_or(*p.rho), *p.rho);
      report.rho_max = std::max(report.rho_max.value_or(*p.rho), *p.rho);
    }
  }
  return report;
}

}  // namespace hobson
