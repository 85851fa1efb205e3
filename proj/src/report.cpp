#include "hobson/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hobson/error.hpp"
#include "hobson/serialization.hpp"

namespace hobson {
namespace {

std::string cell(const std::optional<Percent>& p) { return p ? p->str() : "-"; }

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string range(const std::optional<double>& lo, const std::optional<double>& hi) {
  if (!lo || !hi) return "-";
  if (fixed2(*lo) == fixed2(*hi)) return fixed2(*lo);
  const char* sep = (*lo < 0 || *hi < 0) ? " to " : "-";
  return fixed2(*lo) + sep + fixed2(*hi);
}

std::string whole_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f%%", fraction * 100.0);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string optional_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

template <typename Report, typename KeyOf>
std::vector<std::string> models_in_order(const std::vector<Report>& reports, KeyOf key) {
  std::vector<std::string> models;
  for (const auto& r : reports) {
    const std::string& m = key(r).model;
    if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);
  }
  return models;
}

std::string metrics_section(const std::vector<MetricsReport>& metrics) {
  std::ostringstream out;
  out << "## Outputs by prompt type\n\n";
  const auto models =
      models_in_order(metrics, [](const MetricsReport& r) -> const ReportKey& { return r.key; });
  for (const auto& model : models) {
    out << "### " << model << "\n\n";
    out << "| Prompt | Dataset | Temp | CBR% | HR% | NRR% | HCR% |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : metrics) {
      if (r.key.model == model) out << "| " << metrics_row(r) << " |\n";
    }
    out << "\n";
  }
  out << "\"-\" denotes N/A.\n";
  return out.str();
}

std::string similarity_section(const std::vector<SimilarityReport>& sims) {
  std::ostringstream out;
  out << "## Semantic similarity of conservative-bias labels\n\n";
  if (sims.empty()) {
    out << "No similarity pairs were scored, so this section is empty.\n";
    return out.str();
  }
  // Columns: one per (dataset, target tier), in order of appearance.
  std::vector<std::pair<std::string, PromptTier>> columns;
  for (const auto& s : sims) {
    std::pair<std::string, PromptTier> c{s.key.dataset, s.key.target_tier};
    if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
  }
  const std::string threshold = format_temperature(sims.front().threshold);
  out << "| Model | Constrained temp | Scorer |";
  for (const auto& [dataset, tier] : columns) {
    const std::string name = dataset_display_name(dataset) + " " + std::string(display_name(tier));
    out << " " << name << " >" << threshold << " | " << name << " mean |";
  }
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out << "---|---|";
  out << "\n";

  struct Row {
    std::string model;
    double temperature;
    std::string scorer;
    bool operator==(const Row&) const = default;
  };
  std::vector<Row> rows;
  for (const auto& s : sims) {
    Row r{s.key.model, s.key.constrained_temperature, s.key.scorer};
    if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
  }
  for (const auto& row : rows) {
    out << "| " << row.model << " | " << format_temperature(row.temperature) << " | "
        << row.scorer << " |";
    for (const auto& [dataset, tier] : columns) {
      const SimilarityReport* found = nullptr;
      for (const auto& s : sims) {
        if (s.key.model == row.model && s.key.constrained_temperature == row.temperature &&
            s.key.scorer == row.scorer && s.key.dataset == dataset &&
            s.key.target_tier == tier) {
          found = &s;
        }
      }
      if (found == nullptr || !found->mean) {
        out << " - | - |";
      } else {
        out << " " << whole_percent(*found->fraction_above_threshold) << " | "
            << fixed2(*found->mean) << " ± " << fixed2(*found->std_dev) << " |";
      }
    }
    out << "\n";
  }
  std::size_t unscored = 0;
  for (const auto& s : sims) unscored += s.n_unscored;
  if (unscored > 0) out << "\n" << unscored << " pair(s) could not be scored.\n";
  return out.str();
}

std::string agreement_section(const std::vector<AgreementReport>& agreement) {
  std::ostringstream out;
  out << "## Agreement across runs\n\n";
  if (agreement.empty()) {
    out << "Fewer than two runs per setting, so no agreement was computed.\n";
    return out.str();
  }
  out << "| Model | Dataset | Prompt | Temp | κ | ρ |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& a : agreement) {
    out << "| " << a.key.model << " | " << dataset_display_name(a.key.dataset) << " | "
        << display_name(a.key.tier) << " | " << format_temperature(a.key.temperature)
        << " | " << range(a.kappa_min, a.kappa_max) << " | "
        << range(a.rho_min, a.rho_max) << " |\n";
  }
  return out.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  if (text == "json") return ReportFormat::Json;
  throw ContractError("unknown report format: " + std::string(text));
}

std::string dataset_display_name(std::string_view dataset) {
  if (dataset == "refind") return "REFinD";
  if (dataset == "tacred") return "TACRED";
  return std::string(dataset);
}

std::string format_temperature(double t) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, t);
    if (std::strtod(buf, nullptr) == t) break;
  }
  return buf;
}

std::string metrics_row(const MetricsReport& r) {
  return std::string(display_name(r.key.tier)) + " | " +
         dataset_display_name(r.key.dataset) + " | " +
         format_temperature(r.key.temperature) + " | " + cell(r.cbr) + " | " +
         cell(r.hr) + " | " + cell(r.nrr) + " | " + cell(r.hcr);
}

std::string render_markdown(const ReportBundle& bundle) {
  std::string out = "# Conservative bias report\n\n";
  if (!bundle.metrics.empty()) out += metrics_section(bundle.metrics) + "\n";
  out += similarity_section(bundle.similarity) + "\n";
  out += agreement_section(bundle.agreement);
  return out;
}

std::string render_metrics_csv(const std::vector<MetricsReport>& metrics) {
  std::string out =
      "model,dataset,tier,temperature,cbr,hr,nrr,hcr,n_total,n_hc,n_cb,n_h,n_nr,"
      "n_noise,n_dont_know\n";
  for (const auto& r : metrics) {
    const auto& c = r.counts;
    out += csv_escape(r.key.model) + "," + csv_escape(r.key.dataset) + "," +
           std::string(to_string(r.key.tier)) + "," +
           format_temperature(r.key.temperature) + "," + cell(r.cbr) + "," +
           cell(r.hr) + "," + cell(r.nrr) + "," + cell(r.hcr) + "," +
           std::to_string(c.n_total) + "," + std::to_string(c.n_hc) + "," +
           std::to_string(c.n_cb) + "," + std::to_string(c.n_h) + "," +
           std::to_string(c.n_nr) + "," + std::to_string(c.n_noise) + "," +
           std::to_string(c.n_dont_know) + "\n";
  }
  return out;
}

std::string render_similarity_csv(const std::vector<SimilarityReport>& sims) {
  std::string out =
      "model,dataset,scorer,constrained_temperature,target_tier,threshold,n_pairs,"
      "n_unscored,fraction_above_threshold,mean,std_dev\n";
  for (const auto& s : sims) {
    out += csv_escape(s.key.model) + "," + csv_escape(s.key.dataset) + "," +
           csv_escape(s.key.scorer) + "," +
           format_temperature(s.key.constrained_temperature) + "," +
           std::string(to_string(s.key.target_tier)) + "," +
           format_temperature(s.threshold) + "," + std::to_string(s.n_pairs) + "," +
           std::to_string(s.n_unscored) + "," +
           optional_number(s.fraction_above_threshold) + "," +
           optional_number(s.mean) + "," + optional_number(s.std_dev) + "\n";
  }
  return out;
}

std::string render_agreement_csv(const std::vector<AgreementReport>& agreement) {
  std::string out =
      "model,dataset,tier,temperature,run_a,run_b,n_items,kappa,rho\n";
  for (const auto& a : agreement) {
    for (const auto& p : a.per_pair) {
      out += csv_escape(a.key.model) + "," + csv_escape(a.key.dataset) + "," +
             std::string(to_string(a.key.tier)) + "," +
             format_temperature(a.key.temperature) + "," + std::to_string(p.run_a) +
             "," + std::to_string(p.run_b) + "," + std::to_string(p.n_items) + "," +
             optional_number(p.kappa) + "," + optional_number(p.rho) + "\n";
    }
  }
  return out;
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir) {
  if (bundle.empty()) throw ContractError("nothing to report");
  std::vector<std::filesystem::path> written;
  switch (format) {
    case ReportFormat::Markdown:
      write_file(out_dir / "report.md", render_markdown(bundle));
      written.push_back(out_dir / "report.md");
      break;
    case ReportFormat::Json: {
      const nlohmann::json doc = {{"metrics", bundle.metrics},
                                  {"agreement", bundle.agreement},
                                  {"similarity", bundle.similarity}};
      write_file(out_dir / "report.json", doc.dump(2) + "\n");
      written.push_back(out_dir / "report.json");
      break;
    }
    case ReportFormat::Csv:
      if (!bundle.metrics.empty()) {
        write_file(out_dir / "metrics.csv", render_metrics_csv(bundle.metrics));
        written.push_back(out_dir / "metrics.csv");
      }
      if (!bundle.similarity.empty()) {
        write_file(out_dir / "similarity.csv", render_similarity_csv(bundle.similarity));
        written.push_back(out_dir / "similarity.csv");
      }
      if (!bundle.agreement.empty()) {
        write_file(out_dir / "agreement.csv", render_agreement_csv(bundle.agreement));
        written.push_back(out_dir / "agreement.csv");
      }
      break;
  }
  return written;
}

void sort_reports(ReportBundle& bundle) {
  std::map<std::string, std::size_t> model_rank, dataset_rank;
  auto note = [](std::map<std::string, std::size_t>& rank, const std::string& key) {
    rank.emplace(key, rank.size());
  };
  for (const auto& r : bundle.metrics) {
    note(model_rank, r.key.model);
    note(dataset_rank, r.key.dataset);
  }
  for (const auto& r : bundle.agreement) {
    note(model_rank, r.key.model);
    note(dataset_rank, r.key.dataset);
  }
  for (const auto& r : bundle.similarity) {
    note(model_rank, r.key.model);
    note(dataset_rank, r.key.dataset);
  }
  auto by_key = [&](const ReportKey& a, const ReportKey& b) {
    return std::tuple(model_rank[a.model], dataset_rank[a.dataset], a.tier, a.temperature) <
           std::tuple(model_rank[b.model], dataset_rank[b.dataset], b.tier, b.temperature);
  };
  std::stable_sort(bundle.metrics.begin(), bundle.metrics.end(),
                   [&](const auto& a, const auto& b) { return by_key(a.key, b.key); });
  std::stable_sort(bundle.agreement.begin(), bundle.agreement.end(),
                   [&](const auto& a, const auto& b) { return by_key(a.key, b.key); });
  std::stable_sort(bundle.similarity.begin(), bundle.similarity.end(),
                   [&](const SimilarityReport& a, const SimilarityReport& b) {
                     return std::tuple(model_rank[a.key.model], dataset_rank[a.key.dataset],
                                       a.key.constrained_temperature, a.key.scorer,
                                       a.key.target_tier) <
                            std::tuple(model_rank[b.key.model], dataset_rank[b.key.dataset],
                                       b.key.constrained_temperature, b.key.scorer,
                                       b.key.target_tier);
                   });
}

}  // namespace hobson
