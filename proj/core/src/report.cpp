#include "attrictrl/report.hpp"

#include <cstdio>
#include <map>

#include "attrictrl/error.hpp"
#include "attrictrl/io.hpp"

namespace attrictrl {

namespace {

// Shortest representation that parses back to the same double.
std::string num(double v) { return nlohmann::json(v).dump(); }

std::string fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string csv(std::span<const SweepResult> results) {
  std::string out = "row,attribute,v_target,v_result,seed,avg_diff,spearman\n";
  for (const SweepResult& r : results) {
    const std::string attr(to_string(r.attribute));
    for (const SweepPair& p : r.pairs) {
      out += "pair," + attr + "," + num(p.target) + "," + num(p.result) + "," + std::to_string(p.seed) + ",,\n";
    }
  }
  for (const SweepResult& r : results) {
    out += "summary," + std::string(to_string(r.attribute)) + ",,,," + num(r.avg_diff) + "," + num(r.spearman) + "\n";
  }
  return out;
}

std::string json(std::span<const SweepResult> results) {
  nlohmann::json j = {{"format_version", 1}, {"results", nlohmann::json::array()}};
  for (const SweepResult& r : results) j["results"].push_back(to_json(r));
  return j.dump(2) + "\n";
}

std::string svg(std::span<const SweepResult> results) {
  constexpr double W = 480, H = 400, left = 60, right = 20, top = 30, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double v) { return fixed(left + v * pw, 2); };
  auto py = [&](double v) { return fixed(top + (1.0 - v) * ph, 2); };
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(W, 0) + "\" height=\"" + fixed(H, 0) +
       "\" viewBox=\"0 0 " + fixed(W, 0) + " " + fixed(H, 0) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fixed(W, 0) + "\" height=\"" + fixed(H, 0) + "\" fill=\"white\"/>\n";
  s += "<rect x=\"" + px(0) + "\" y=\"" + py(1) + "\" width=\"" + fixed(pw, 2) + "\" height=\"" + fixed(ph, 2) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double v = i / 10.0;
    s += "<text x=\"" + px(v) + "\" y=\"" + fixed(H - bottom + 18, 2) + "\" font-size=\"11\" text-anchor=\"middle\">" +
         fixed(v, 1) + "</text>\n";
    s += "<text x=\"" + fixed(left - 8, 2) + "\" y=\"" + py(v) + "\" font-size=\"11\" text-anchor=\"end\">" +
         fixed(v, 1) + "</text>\n";
  }
  s += "<text x=\"" + px(0.5) + "\" y=\"" + fixed(H - 10, 2) + "\" font-size=\"12\" text-anchor=\"middle\">v_target</text>\n";
  s += "<text x=\"15\" y=\"" + py(0.5) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
       py(0.5) + ")\">mean v_result</text>\n";
  s += "<line x1=\"" + px(0) + "\" y1=\"" + py(0) + "\" x2=\"" + px(1) + "\" y2=\"" + py(1) +
       "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";

  for (std::size_t i = 0; i < results.size(); ++i) {
    const SweepResult& r = results[i];
    std::map<double, std::pair<double, int>> by_target;
    for (const SweepPair& p : r.pairs) {
      by_target[p.target].first += p.result;
      by_target[p.target].second += 1;
    }
    const char* color = kColors[i % 4];
    std::string points;
    for (const auto& [t, acc] : by_target) {
      if (!points.empty()) points += ' ';
      points += px(t) + "," + py(acc.first / acc.second);
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    for (const auto& [t, acc] : by_target) {
      s += "<circle cx=\"" + px(t) + "\" cy=\"" + py(acc.first / acc.second) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    s += "<text x=\"" + fixed(left + 8, 2) + "\" y=\"" + fixed(top + 16 + 14.0 * static_cast<double>(i), 2) +
         "\" font-size=\"12\" fill=\"" + color + "\">" + std::string(to_string(r.attribute)) +
         " (AvgDiff " + fixed(r.avg_diff, 3) + ")</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "svg") return ReportFormat::Svg;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

std::string_view extension(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
    case ReportFormat::Svg: return "svg";
  }
  return "";
}

std::string emit_report(std::span<const SweepResult> results, ReportFormat format) {
  if (results.empty()) throw ContractError("report needs at least one result");
  for (const SweepResult& r : results) {
    if (r.pairs.empty()) throw ContractError("sweep result has no pairs");
  }
  switch (format) {
    case ReportFormat::Csv: return csv(results);
    case ReportFormat::Json: return json(results);
    case ReportFormat::Svg: return svg(results);
  }
  throw ContractError("invalid report format");
}

void write_report(const std::filesystem::path& path, std::span<const SweepResult> results, ReportFormat format) {
  write_text_atomic(path, emit_report(results, format));
}

}  // namespace attrictrl
