#include "seamline/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seamline/error.hpp"

namespace seamline {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(Errc::Schema, "line " + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  return *it;
}

template <class T>
T require_as(const json& obj, const char* key, std::size_t line_no) {
  const auto& v = require(obj, key, line_no);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(Errc::Schema, "line " + std::to_string(line_no) + ": field '" + key + "' has the wrong type");
  }
}

HybridDocument document_from_json(const json& obj, std::size_t line_no) {
  if (!obj.is_object()) fail(Errc::Schema, "line " + std::to_string(line_no) + ": record is not an object");
  HybridDocument doc;
  doc.doc_id = require_as<std::string>(obj, "doc_id", line_no);
  doc.prompt_id = require_as<int>(obj, "prompt_id", line_no);
  doc.source_id = require_as<std::string>(obj, "source_id", line_no);
  if (auto it = obj.find("task_id"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) fail(Errc::Schema, "line " + std::to_string(line_no) + ": task_id must be int or null");
    doc.task_id = it->get<int>();
  }
  const auto& sentences = require(obj, "sentences", line_no);
  if (!sentences.is_array()) fail(Errc::Schema, "line " + std::to_string(line_no) + ": sentences must be an array");
  std::size_t index = 1;
  for (const auto& s : sentences) {
    Sentence sentence;
    sentence.index = index++;
    sentence.text = require_as<std::string>(s, "text", line_no);
    if (sentence.text.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
      fail(Errc::Schema, "line " + std::to_string(line_no) + ": blank sentence text");
    }
    if (auto it = s.find("label"); it != s.end() && !it->is_null()) {
      if (!it->is_string()) fail(Errc::Schema, "line " + std::to_string(line_no) + ": label must be a string");
      auto label = parse_label(it->get<std::string>());
      if (!label) fail(Errc::Schema, "line " + std::to_string(line_no) + ": label must be \"H\" or \"G\"");
      sentence.label = label;
    }
    doc.sentences.push_back(std::move(sentence));
  }
  return doc;
}

}  // namespace

std::string document_to_json_line(const HybridDocument& doc) {
  json sentences = json::array();
  for (const auto& s : doc.sentences) {
    sentences.push_back({{"text", s.text},
                         {"label", s.label ? json(std::string(label_code(*s.label))) : json(nullptr)}});
  }
  json obj = {{"doc_id", doc.doc_id},
              {"prompt_id", doc.prompt_id},
              {"source_id", doc.source_id},
              {"task_id", doc.task_id ? json(*doc.task_id) : json(nullptr)},
              {"sentences", std::move(sentences)}};
  return obj.dump();
}

std::vector<HybridDocument> read_corpus(std::istream& in) {
  std::vector<HybridDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(Errc::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    docs.push_back(document_from_json(obj, line_no));
  }
  return docs;
}

std::vector<HybridDocument> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open corpus file " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<HybridDocument>& docs) {
  for (const auto& doc : docs) out << document_to_json_line(doc) << '\n';
}

void save_corpus(const std::vector<HybridDocument>& docs, const std::filesystem::path& path) {
  std::ostringstream out;
  write_corpus(out, docs);
  write_text_file(path, out.str());
}

std::vector<RawEssay> load_source_essays(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open source file " + path.string());
  std::vector<RawEssay> essays;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(Errc::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    RawEssay essay;
    essay.source_id = require_as<std::string>(obj, "source_id", line_no);
    essay.prompt_id = require_as<int>(obj, "prompt_id", line_no);
    essay.text = require_as<std::string>(obj, "text", line_no);
    if (auto it = obj.find("instructions"); it != obj.end() && it->is_string()) {
      essay.instructions = it->get<std::string>();
    }
    essays.push_back(std::move(essay));
  }
  return essays;
}

void save_source_essays(const std::vector<RawEssay>& essays, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& e : essays) {
    json obj = {{"source_id", e.source_id}, {"prompt_id", e.prompt_id}, {"text", e.text}};
    if (!e.instructions.empty()) obj["instructions"] = e.instructions;
    out << obj.dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot write " + path.string());
  out << content;
  if (!out) fail(Errc::Io, "write failed for " + path.string());
}

}  // namespace seamline
