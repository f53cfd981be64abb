#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "seamline/corpus.hpp"

namespace seamline {

/// JSON-lines corpus: one document per line,
/// {"doc_id", "prompt_id", "source_id", "task_id", "sentences": [{"text", "label"}]}.
std::vector<HybridDocument> read_corpus(std::istream& in);
std::vector<HybridDocument> load_corpus(const std::filesystem::path& path);

void write_corpus(std::ostream& out, const std::vector<HybridDocument>& docs);
void save_corpus(const std::vector<HybridDocument>& docs, const std::filesystem::path& path);

std::string document_to_json_line(const HybridDocument& doc);

/// Source essays: {"source_id", "prompt_id", "text", "instructions"?} per line.
std::vector<RawEssay> load_source_essays(const std::filesystem::path& path);
void save_source_essays(const std::vector<RawEssay>& essays, const std::filesystem::path& path);

/// Throws Io when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace seamline
