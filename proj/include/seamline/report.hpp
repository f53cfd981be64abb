#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "seamline/corpus.hpp"
#include "seamline/detector.hpp"
#include "seamline/experiment.hpp"

namespace seamline {

enum class ReportFormat { Text, Json, Html };

ReportFormat parse_report_format(const std::string& name);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Table with columns #Bry=1, #Bry=2, #Bry=3, All; one row per method.
std::string render_text(const EvalReport& report);

/// Annotated documents with a marker after every predicted boundary.
/// Uses run 0 of the given method row.
std::string render_html(const EvalReport& report, const std::vector<HybridDocument>& docs,
                        std::size_t method_index = 0);

/// Same view for raw predictions keyed by doc_id.
std::string render_predictions_html(const std::vector<HybridDocument>& docs,
                                    const std::map<std::string, std::vector<std::size_t>>& predicted,
                                    const std::string& title);

/// Text and JSON need no corpus; HTML uses `docs`.
std::string render_report(const EvalReport& report, ReportFormat format,
                          const std::vector<HybridDocument>& docs = {});

}  // namespace seamline
