#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hobson/metrics.hpp"
#include "hobson/similarity.hpp"

namespace hobson {

enum class ReportFormat { Csv, Markdown, Json };

// "csv", "markdown"/"md", "json"; anything else throws ContractError.
ReportFormat parse_report_format(std::string_view text);

struct ReportBundle {
  std::vector<MetricsReport> metrics;
  std::vector<AgreementReport> agreement;
  std::vector<SimilarityReport> similarity;

  bool empty() const {
    return metrics.empty() && agreement.empty() && similarity.empty();
  }
};

// "REFinD" / "TACRED" for the known datasets, the tag itself otherwise.
std::string dataset_display_name(std::string_view dataset);
// Shortest decimal that round-trips, e.g. "0.2".
std::string format_temperature(double temperature);

/// One outputs-by-prompt-type row without the outer pipes:
/// "Const. | REFinD | 0.2 | 1.21 | 0.00 | - | 57.70". N/A cells are "-".
std::string metrics_row(const MetricsReport& report);

std::string render_markdown(const ReportBundle& bundle);
std::string render_metrics_csv(const std::vector<MetricsReport>& metrics);
std::string render_similarity_csv(const std::vector<SimilarityReport>& sims);
std::string render_agreement_csv(const std::vector<AgreementReport>& agreement);

/// Writes the bundle under `out_dir`: report.md for markdown, report.json
/// for json, and metrics.csv / similarity.csv / agreement.csv (non-empty
/// sections only) for csv. Returns the files written. Throws ContractError
/// when the bundle is empty.
std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir);

// Report ordering: model and dataset by first appearance, then tier, then
// temperature.
void sort_reports(ReportBundle& bundle);

}  // namespace hobson
