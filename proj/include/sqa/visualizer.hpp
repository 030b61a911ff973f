#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/executor.hpp"
#include "sqa/llm.hpp"

namespace sqa {

struct ChartSeries {
  std::string label;
  std::vector<double> values;
};

struct ChartSpec {
  std::string chart_type;  // bar | grouped_bar | line | pie
  std::string title;
  std::string x_label;
  std::vector<std::string> categories;
  std::vector<ChartSeries> series;
  std::vector<int> source_step_ids;
};

void to_json(nlohmann::json& j, const ChartSpec& s);
/// Throws Error(kInvalidInput) when the JSON does not have the ChartSpec shape.
ChartSpec chart_spec_from_json(const nlohmann::json& j);

bool is_chart_type(const std::string& t);

/// Every numeric cell of a step payload: year, citation_count, fwci for
/// articles; document_count, total_citations, average_fwci for facets; and
/// total_matches.
std::vector<double> payload_numbers(const StepResult& step);

/// Type, shape and traceability checks. A value is traceable when it equals
/// a numeric cell of one of the spec's source steps.
std::vector<std::string> validate_chart_spec(const ChartSpec& spec, const RunTrace& trace);

struct PlotDecision {
  bool wanted = false;
  std::string rationale;
  std::vector<std::string> chart_types;
  bool forced = false;  // decided without the model
};

void to_json(nlohmann::json& j, const PlotDecision& d);

/// True iff some ok step has at least two rows.
bool plottable(const RunTrace& trace);

PlotDecision decide_plots(const std::string& question, const std::string& response,
                          const RunTrace& trace, Gateway& gateway, CallLog* log = nullptr,
                          std::vector<std::string>* warnings = nullptr,
                          const std::string& profile = "utility_model");

inline constexpr int kMaxChartCalls = 3;

struct ChartRun {
  std::vector<ChartSpec> charts;
  std::vector<std::string> warnings;
  int model_calls = 0;
};

/// Up to kMaxChartCalls model calls. Valid specs are kept as they arrive;
/// each later call receives the violations of the rejected specs and asks
/// for corrected versions of those only.
ChartRun generate_charts(const PlotDecision& decision, const std::string& question,
                         const RunTrace& trace, Gateway& gateway, CallLog* log = nullptr,
                         const std::string& profile = "utility_model");

/// Static SVG rendering of a valid spec.
std::string render_svg(const ChartSpec& spec);

/// JSON Schema of the chart spec object.
nlohmann::json chart_spec_schema();

}  // namespace sqa
