#include "seamline/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "seamline/error.hpp"

namespace seamline {

using nlohmann::json;

ReportFormat parse_report_format(const std::string& name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "json") return ReportFormat::Json;
  if (name == "html") return ReportFormat::Html;
  fail(Errc::InvalidArgument, "unknown report format '" + name + "'");
}

json report_to_json(const EvalReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json runs = json::array();
    for (const auto& r : m.runs) {
      json docs = json::array();
      for (const auto& d : r.docs) {
        docs.push_back({{"doc_id", d.doc_id},
                        {"boundaries", d.boundaries},
                        {"f1", d.f1},
                        {"predicted", d.predicted},
                        {"fold", d.fold ? json(*d.fold) : json(nullptr)}});
      }
      runs.push_back({{"run", r.run}, {"seed", r.seed}, {"overall", r.overall}, {"breakdown", r.breakdown},
                      {"docs", docs}});
    }
    methods.push_back({{"method_id", m.method_id},
                       {"overall", m.overall},
                       {"breakdown", m.breakdown},
                       {"runs", runs},
                       {"error", m.error ? json(*m.error) : json(nullptr)}});
  }
  return {{"schema", report.schema},
          {"runs", report.runs},
          {"config", report.config},
          {"unscored_docs", report.unscored_docs},
          {"methods", methods}};
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport report;
    report.schema = j.at("schema").get<std::string>();
    if (report.schema != kReportSchema) fail(Errc::Schema, "unsupported report schema " + report.schema);
    report.runs = j.at("runs").get<std::size_t>();
    report.config = j.value("config", json::object());
    report.unscored_docs = j.value("unscored_docs", std::size_t{0});
    for (const auto& mj : j.at("methods")) {
      MethodReport m;
      m.method_id = mj.at("method_id").get<std::string>();
      m.overall = mj.at("overall").get<double>();
      m.breakdown = mj.at("breakdown").get<std::map<std::string, double>>();
      if (!mj.at("error").is_null()) m.error = mj["error"].get<std::string>();
      for (const auto& rj : mj.at("runs")) {
        RunScores r;
        r.run = rj.at("run").get<std::size_t>();
        r.seed = rj.at("seed").get<std::uint64_t>();
        r.overall = rj.at("overall").get<double>();
        r.breakdown = rj.at("breakdown").get<std::map<std::string, double>>();
        for (const auto& dj : rj.at("docs")) {
          DocScore d;
          d.doc_id = dj.at("doc_id").get<std::string>();
          d.boundaries = dj.at("boundaries").get<std::size_t>();
          d.f1 = dj.at("f1").get<double>();
          d.predicted = dj.at("predicted").get<std::vector<std::size_t>>();
          if (!dj.at("fold").is_null()) d.fold = dj["fold"].get<int>();
          r.docs.push_back(std::move(d));
        }
        m.runs.push_back(std::move(r));
      }
      report.methods.push_back(std::move(m));
    }
    return report;
  } catch (const json::exception& e) {
    fail(Errc::Schema, std::string("malformed report: ") + e.what());
  }
}

std::string render_text(const EvalReport& report) {
  static constexpr const char* kColumns[] = {"#Bry=1", "#Bry=2", "#Bry=3", "All"};
  std::size_t name_width = 6;
  for (const auto& m : report.methods) name_width = std::max(name_width, m.method_id.size());
  std::ostringstream out;
  char buf[64];
  auto pad = [&](const std::string& s) { return s + std::string(name_width - s.size(), ' '); };
  out << pad("Method");
  for (const char* c : kColumns) {
    std::snprintf(buf, sizeof buf, "  %7s", c);
    out << buf;
  }
  out << '\n' << std::string(name_width + 4 * 9, '-') << '\n';
  for (const auto& m : report.methods) {
    out << pad(m.method_id);
    if (m.error) {
      out << "  failed: " << *m.error << '\n';
      continue;
    }
    for (const char* key : {"1", "2", "3"}) {
      auto it = m.breakdown.find(key);
      if (it == m.breakdown.end()) {
        std::snprintf(buf, sizeof buf, "  %7s", "-");
      } else {
        std::snprintf(buf, sizeof buf, "  %7.3f", it->second);
      }
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %7.3f", m.overall);
    out << buf << '\n';
  }
  return out.str();
}

namespace {

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr std::string_view kStyle =
    "body{font-family:sans-serif;max-width:60em;margin:auto}"
    ".doc{border:1px solid #ccc;padding:.5em;margin:1em 0}"
    ".s{display:block;padding:.1em .3em}.s.H{background:#eef6ff}.s.G{background:#fff1e6}"
    "hr.boundary{border:0;border-top:3px solid #c00;margin:.2em 0}";

}  // namespace

std::string render_predictions_html(const std::vector<HybridDocument>& docs,
                                    const std::map<std::string, std::vector<std::size_t>>& predicted,
                                    const std::string& title) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << escape_html(title)
      << "</title><style>" << kStyle << "</style></head><body>\n<h1>" << escape_html(title) << "</h1>\n";
  for (const auto& doc : docs) {
    auto it = predicted.find(doc.doc_id);
    if (it == predicted.end()) continue;
    const std::set<std::size_t> marks(it->second.begin(), it->second.end());
    out << "<div class=\"doc\" id=\"" << escape_html(doc.doc_id) << "\"><h2>" << escape_html(doc.doc_id)
        << "</h2>\n";
    for (const auto& s : doc.sentences) {
      const char* cls = s.label ? (*s.label == AuthorLabel::Human ? " H" : " G") : "";
      out << "<span class=\"s" << cls << "\">" << s.index << ". " << escape_html(s.text) << "</span>\n";
      if (marks.contains(s.index) && s.index < doc.size()) {
        out << "<hr class=\"boundary\" data-pos=\"" << s.index << "\">\n";
      }
    }
    out << "</div>\n";
  }
  out << "</body></html>\n";
  return out.str();
}

std::string render_html(const EvalReport& report, const std::vector<HybridDocument>& docs,
                        std::size_t method_index) {
  std::map<std::string, std::vector<std::size_t>> predicted;
  std::string title = "Boundary predictions";
  if (method_index < report.methods.size()) {
    const auto& m = report.methods[method_index];
    title += ": " + m.method_id;
    if (!m.runs.empty()) {
      for (const auto& d : m.runs.front().docs) predicted[d.doc_id] = d.predicted;
    }
  }
  return render_predictions_html(docs, predicted, title);
}

std::string render_report(const EvalReport& report, ReportFormat format, const std::vector<HybridDocument>& docs) {
  switch (format) {
    case ReportFormat::Text: return render_text(report);
    case ReportFormat::Json: return report_to_json(report).dump(2) + "\n";
    case ReportFormat::Html: return render_html(report, docs);
  }
  return {};
}

}  // namespace seamline
