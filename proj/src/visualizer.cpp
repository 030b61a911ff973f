#include "sqa/visualizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "sqa/error.hpp"
#include "sqa/prompts.hpp"
#include "sqa/schema.hpp"

namespace sqa {

using nlohmann::json;

namespace {

const std::set<std::string>& chart_types() {
  static const std::set<std::string> kTypes = {"bar", "grouped_bar", "line", "pie"};
  return kTypes;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

bool is_chart_type(const std::string& t) { return chart_types().count(t) > 0; }

void to_json(json& j, const ChartSpec& s) {
  json series = json::array();
  for (const auto& se : s.series) series.push_back({{"label", se.label}, {"values", se.values}});
  j = {{"chart_type", s.chart_type},
       {"title", s.title},
       {"x", {{"label", s.x_label}, {"categories", s.categories}}},
       {"series", series},
       {"source_step_ids", s.source_step_ids}};
}

json chart_spec_schema() {
  return {
      {"type", "object"},
      {"required", {"chart_type", "title", "x", "series", "source_step_ids"}},
      {"properties",
       {{"chart_type", {{"type", "string"}}},
        {"title", {{"type", "string"}}},
        {"x",
         {{"type", "object"},
          {"required", {"categories"}},
          {"properties",
           {{"label", {{"type", "string"}}},
            {"categories", {{"type", "array"}, {"items", {{"type", "string"}}}}}}}}},
        {"series",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"required", {"label", "values"}},
            {"properties",
             {{"label", {{"type", "string"}}},
              {"values", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}}}}},
        {"source_step_ids", {{"type", "array"}, {"items", {{"type", "integer"}}}}}}}};
}

ChartSpec chart_spec_from_json(const json& j) {
  auto errs = validate_json(j, chart_spec_schema());
  if (!errs.empty()) throw Error(ErrorCode::kInvalidInput, "chart spec: " + errs.front());
  ChartSpec s;
  s.chart_type = j.at("chart_type").get<std::string>();
  s.title = j.at("title").get<std::string>();
  s.x_label = j.at("x").value("label", "");
  s.categories = j.at("x").at("categories").get<std::vector<std::string>>();
  for (const auto& se : j.at("series")) {
    s.series.push_back({se.at("label").get<std::string>(), se.at("values").get<std::vector<double>>()});
  }
  s.source_step_ids = j.at("source_step_ids").get<std::vector<int>>();
  return s;
}

std::vector<double> payload_numbers(const StepResult& step) {
  std::vector<double> out;
  const auto& p = step.payload;
  if (p.articles) {
    out.push_back(static_cast<double>(p.articles->total_matches));
    for (const auto& r : p.articles->rows) {
      out.push_back(r.year);
      if (r.citation_count) out.push_back(static_cast<double>(*r.citation_count));
      if (r.fwci) out.push_back(*r.fwci);
    }
  }
  if (p.facets) {
    out.push_back(static_cast<double>(p.facets->total_matches));
    for (const auto& r : p.facets->rows) {
      out.push_back(static_cast<double>(r.document_count));
      if (r.total_citations) out.push_back(static_cast<double>(*r.total_citations));
      if (r.average_fwci) out.push_back(*r.average_fwci);
    }
  }
  return out;
}

std::vector<std::string> validate_chart_spec(const ChartSpec& spec, const RunTrace& trace) {
  std::vector<std::string> v;
  if (!is_chart_type(spec.chart_type)) v.push_back("unknown chart_type '" + spec.chart_type + "'");
  if (spec.title.empty()) v.push_back("missing title");
  if (spec.categories.empty()) v.push_back("no categories");
  if (spec.series.empty()) v.push_back("no series");

  std::set<std::string> labels;
  bool dup = false;
  for (const auto& s : spec.series) {
    if (s.values.size() != spec.categories.size()) {
      v.push_back("series '" + s.label + "' has " + std::to_string(s.values.size()) + " values for " +
                  std::to_string(spec.categories.size()) + " categories");
    }
    if (!labels.insert(s.label).second) dup = true;
  }
  if (dup) v.push_back("duplicate series label");

  bool pie = spec.chart_type == "pie";
  if (pie && spec.series.size() != 1) v.push_back("pie must have exactly one series");
  bool negative = false;
  if (pie) {
    for (const auto& s : spec.series) {
      for (double x : s.values) negative = negative || x < 0;
    }
    if (negative) v.push_back("pie values must be non-negative");
  }

  std::set<double> cells;
  if (spec.source_step_ids.empty()) v.push_back("no source steps");
  for (int id : spec.source_step_ids) {
    auto it = trace.steps.find(id);
    if (it == trace.steps.end() || it->second.status != StepStatus::kOk) {
      v.push_back("source step " + std::to_string(id) + " is not an ok step");
      continue;
    }
    for (double x : payload_numbers(it->second)) cells.insert(x);
  }
  for (const auto& s : spec.series) {
    for (double x : s.values) {
      if (!std::isfinite(x)) {
        v.push_back("series '" + s.label + "' has a non-finite value");
      } else if (pie && x < 0) {
        continue;  // already reported
      } else if (!cells.count(x)) {
        v.push_back("value " + num(x) + " in series '" + s.label + "' is not in the source step data");
      }
    }
  }
  return v;
}

void to_json(json& j, const PlotDecision& d) {
  j = {{"wanted", d.wanted}, {"rationale", d.rationale}, {"chart_types", d.chart_types},
       {"forced", d.forced}};
}

bool plottable(const RunTrace& trace) {
  for (const auto& [id, s] : trace.steps) {
    if (s.status == StepStatus::kOk && s.payload.rows() >= 2) return true;
  }
  return false;
}

namespace {

json data_digest(const RunTrace& trace) {
  json data = json::array();
  for (const auto& [id, s] : trace.steps) {
    if (s.status != StepStatus::kOk) continue;
    data.push_back({{"step", id}, {"subtask", s.subtask}, {"result", s.payload.to_json()}});
  }
  return data;
}

std::optional<PlotDecision> parse_decision(const std::string& text, std::string* err) {
  auto j = extract_json_object(text);
  if (!j) {
    *err = "reply is not a JSON object";
    return std::nullopt;
  }
  if (!j->contains("wanted") || !(*j)["wanted"].is_boolean()) {
    *err = "field 'wanted' must be a boolean";
    return std::nullopt;
  }
  PlotDecision d;
  d.wanted = (*j)["wanted"].get<bool>();
  if (j->contains("rationale") && (*j)["rationale"].is_string()) d.rationale = (*j)["rationale"];
  if (j->contains("chart_types") && (*j)["chart_types"].is_array()) {
    for (const auto& t : (*j)["chart_types"]) {
      if (t.is_string() && is_chart_type(t.get<std::string>())) d.chart_types.push_back(t);
    }
  }
  return d;
}

}  // namespace

PlotDecision decide_plots(const std::string& question, const std::string& response,
                          const RunTrace& trace, Gateway& gateway, CallLog* log,
                          std::vector<std::string>* warnings, const std::string& profile) {
  if (!plottable(trace)) {
    PlotDecision d;
    d.forced = true;
    d.rationale = "no step returned two or more rows";
    return d;
  }
  ChatRequest req;
  req.purpose = "plot_decision";
  req.system_prompt = prompts::plot_decision_system();
  req.response_format = ResponseFormat::kJsonObject;
  req.messages.push_back({Role::kUser, "Question: " + question + "\nAnswer:\n" + response +
                                           "\nData:\n" + data_digest(trace).dump()});
  for (int round = 0; round < 2; ++round) {
    std::string text;
    try {
      text = gateway.chat(profile, req, log).text;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kProviderUnavailable) throw;
      text.clear();
    }
    std::string err;
    if (auto d = parse_decision(text, &err)) return *d;
    req.messages.push_back({Role::kAssistant, text});
    req.messages.push_back({Role::kUser, "Your reply was rejected: " + err +
                                             ". Reply again with the JSON object only."});
  }
  if (warnings != nullptr) warnings->push_back("plot decision malformed after repair; no charts");
  return {};
}

ChartRun generate_charts(const PlotDecision& decision, const std::string& question,
                         const RunTrace& trace, Gateway& gateway, CallLog* log,
                         const std::string& profile) {
  ChartRun run;
  if (!decision.wanted) return run;

  ChatRequest req;
  req.purpose = "charts";
  req.system_prompt = prompts::chart_system();
  req.response_format = ResponseFormat::kJsonObject;
  std::string types;
  for (const auto& t : decision.chart_types) types += (types.empty() ? "" : ", ") + t;
  req.messages.push_back({Role::kUser, "Question: " + question +
                                           (types.empty() ? "" : "\nSuggested chart types: " + types) +
                                           "\nData:\n" + data_digest(trace).dump()});

  // Rejected specs from the latest round, with their violations.
  std::vector<std::pair<json, std::vector<std::string>>> rejected;
  for (int round = 0; round < kMaxChartCalls; ++round) {
    std::string text;
    try {
      text = gateway.chat(profile, req, log).text;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kProviderUnavailable) throw;
    }
    ++run.model_calls;
    rejected.clear();
    std::string reply_error;
    auto j = extract_json_object(text);
    if (!j || !j->contains("charts") || !(*j)["charts"].is_array()) {
      reply_error = "reply must be a JSON object with a 'charts' array";
    } else {
      for (const auto& sj : (*j)["charts"]) {
        auto shape = validate_json(sj, chart_spec_schema());
        if (!shape.empty()) {
          rejected.push_back({sj, shape});
          continue;
        }
        ChartSpec spec = chart_spec_from_json(sj);
        auto v = validate_chart_spec(spec, trace);
        if (v.empty()) {
          run.charts.push_back(std::move(spec));
        } else {
          rejected.push_back({sj, v});
        }
      }
    }
    if (reply_error.empty() && rejected.empty()) break;
    if (round + 1 == kMaxChartCalls) break;
    std::string fb;
    if (!reply_error.empty()) {
      fb = "Your reply was rejected: " + reply_error + ".";
    } else {
      fb = "These chart specs were rejected:\n";
      for (std::size_t i = 0; i < rejected.size(); ++i) {
        fb += "spec " + std::to_string(i + 1) + ": " + rejected[i].first.dump() + "\n";
        for (const auto& m : rejected[i].second) fb += "  - " + m + "\n";
      }
      fb += "Reply with {\"charts\": [...]} holding corrected versions of the rejected specs only.";
    }
    req.messages.push_back({Role::kAssistant, text});
    req.messages.push_back({Role::kUser, fb});
  }
  for (const auto& [sj, v] : rejected) {
    std::string title = sj.is_object() && sj.contains("title") && sj["title"].is_string()
                            ? sj["title"].get<std::string>()
                            : std::string("untitled");
    run.warnings.push_back("chart '" + title + "' dropped: " + v.front());
  }
  if (run.charts.empty()) run.warnings.push_back("no valid chart produced");
  return run;
}

std::string render_svg(const ChartSpec& spec) {
  const double W = 640, H = 400, L = 60, R = 20, T = 40, B = 70;
  const double pw = W - L - R, ph = H - T - B;
  static const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                   "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">" << xml_escape(spec.title) << "</text>\n";

  const std::size_t n = spec.categories.size();
  if (spec.chart_type == "pie" && !spec.series.empty()) {
    const auto& vals = spec.series[0].values;
    double total = 0;
    for (double v : vals) total += v;
    const double cx = W / 2, cy = T + ph / 2, r = ph / 2;
    double a0 = -M_PI / 2;
    for (std::size_t i = 0; i < vals.size() && total > 0; ++i) {
      double a1 = a0 + 2 * M_PI * vals[i] / total;
      const char* col = kPalette[i % 8];
      if (vals[i] >= total) {
        o << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
          << "\" fill=\"" << col << "\"/>\n";
      } else if (vals[i] > 0) {
        o << "<path d=\"M" << num(cx) << ',' << num(cy) << " L" << num(cx + r * std::cos(a0)) << ','
          << num(cy + r * std::sin(a0)) << " A" << num(r) << ',' << num(r) << " 0 "
          << (a1 - a0 > M_PI ? 1 : 0) << " 1 " << num(cx + r * std::cos(a1)) << ','
          << num(cy + r * std::sin(a1)) << " Z\" fill=\"" << col << "\"/>\n";
      }
      o << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 16 * (i + 1)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << col << "\">"
        << xml_escape(i < n ? spec.categories[i] : "") << " (" << num(vals[i]) << ")</text>\n";
      a0 = a1;
    }
    o << "</svg>\n";
    return o.str();
  }

  double hi = 0, lo = 0;
  for (const auto& s : spec.series) {
    for (double v : s.values) {
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
  }
  if (hi == lo) hi = lo + 1;
  auto y_of = [&](double v) { return T + ph * (hi - v) / (hi - lo); };
  o << "<line x1=\"" << L << "\" y1=\"" << num(y_of(0)) << "\" x2=\"" << L + pw << "\" y2=\""
    << num(y_of(0)) << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double v = lo + (hi - lo) * t / 4;
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(y_of(v) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(v) << "</text>\n";
  }
  const double slot = n > 0 ? pw / static_cast<double>(n) : pw;
  for (std::size_t i = 0; i < n; ++i) {
    double x = L + slot * (static_cast<double>(i) + 0.5);
    o << "<text x=\"" << num(x) << "\" y=\"" << T + ph + 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
      << xml_escape(spec.categories[i]) << "</text>\n";
  }
  if (!spec.x_label.empty()) {
    o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(spec.x_label) << "</text>\n";
  }
  const std::size_t k = spec.series.size();
  for (std::size_t si = 0; si < k; ++si) {
    const auto& s = spec.series[si];
    const char* col = kPalette[si % 8];
    if (spec.chart_type == "line") {
      o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.values.size() && i < n; ++i) {
        o << (i ? " " : "") << num(L + slot * (static_cast<double>(i) + 0.5)) << ','
          << num(y_of(s.values[i]));
      }
      o << "\"/>\n";
    } else {
      double bw = slot * 0.8 / static_cast<double>(k);
      for (std::size_t i = 0; i < s.values.size() && i < n; ++i) {
        double x = L + slot * static_cast<double>(i) + slot * 0.1 + bw * static_cast<double>(si);
        double y0 = y_of(std::max(0.0, s.values[i])), y1 = y_of(std::min(0.0, s.values[i]));
        o << "<rect x=\"" << num(x) << "\" y=\"" << num(y0) << "\" width=\"" << num(bw)
          << "\" height=\"" << num(y1 - y0) << "\" fill=\"" << col << "\"/>\n";
      }
    }
    if (k > 1) {
      o << "<text x=\"" << W - R - 120 << "\" y=\"" << T + 14 * (si + 1)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << col << "\">"
        << xml_escape(s.label) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace sqa
