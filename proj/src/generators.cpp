#include "seamline/generators.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>
#include <unistd.h>

#include "seamline/corpus_io.hpp"
#include "seamline/error.hpp"

namespace seamline {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 16> kOnsets = {"zo", "vr", "qu", "xa", "ky", "th", "dr", "mo",
                                                      "pl", "sk", "ve", "ju", "fa", "gr", "lu", "wy"};
constexpr std::array<std::string_view, 8> kNuclei = {"ar", "ix", "el", "un", "oz", "ae", "yr", "om"};
constexpr std::array<std::string_view, 4> kCodas = {"n", "k", "ss", "th"};

std::string pseudo_word(std::uint64_t h) {
  std::string w;
  w += kOnsets[h % kOnsets.size()];
  h /= kOnsets.size();
  w += kNuclei[h % kNuclei.size()];
  h /= kNuclei.size();
  w += kOnsets[h % kOnsets.size()];
  h /= kOnsets.size();
  w += kNuclei[h % kNuclei.size()];
  h /= kNuclei.size();
  w += kCodas[h % kCodas.size()];
  return w;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

}  // namespace

MockGenerator::MockGenerator(std::uint64_t seed, MockMode mode) : seed_(seed), mode_(mode) {}

std::string MockGenerator::id() const {
  switch (mode_) {
    case MockMode::Conforming: return "mock";
    case MockMode::DuplicateSentence: return "mock:duplicate";
    case MockMode::DropEnding: return "mock:drop-ending";
  }
  return "mock";
}

std::string MockGenerator::generate(const GenerationRequest& request) {
  Rng rng(derive_seed(seed_, request.instructions + "\n" + request.directive));
  std::set<std::string> used;
  auto sentence = [&] {
    for (;;) {
      const auto words = static_cast<std::size_t>(rng.between(8, 18));
      std::string s;
      for (std::size_t w = 0; w < words; ++w) {
        auto word = pseudo_word(rng.next_u64());
        if (w == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
        if (!s.empty()) s.push_back(' ');
        s += word;
      }
      s.push_back('.');
      if (used.insert(s).second) return s;
    }
  };
  std::size_t slot_count = request.slots.size();
  if (mode_ == MockMode::DropEnding && slot_count > 0) --slot_count;
  std::vector<std::string> pieces;
  bool duplicated = false;
  for (std::size_t i = 0; i < slot_count; ++i) {
    const auto& slot = request.slots[i];
    if (slot.fixed) {
      pieces.push_back(join(slot.sentences));
      continue;
    }
    const std::size_t count = std::clamp<std::size_t>(slot.target_sentences, 1, 12);
    std::vector<std::string> generated;
    for (std::size_t j = 0; j < count; ++j) generated.push_back(sentence());
    if (mode_ == MockMode::DuplicateSentence && !duplicated) {
      generated.push_back(generated.front());
      duplicated = true;
    }
    pieces.push_back(join(generated));
  }
  if (mode_ == MockMode::DuplicateSentence && !duplicated) {
    // No fill slot to corrupt; repeat the first kept piece instead.
    if (!pieces.empty()) pieces.push_back(pieces.front());
  }
  return join(pieces);
}

std::string generation_request_json(const GenerationRequest& request) {
  json obj = {{"instructions", request.instructions},
              {"directive", request.directive},
              {"max_tokens", request.max_tokens}};
  return obj.dump();
}

std::string parse_generation_response(const std::string& body) {
  try {
    const auto obj = json::parse(body);
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
      fail(Errc::GeneratorUnavailable, "generator response lacks a string 'text' field");
    }
    return obj["text"].get<std::string>();
  } catch (const json::exception& e) {
    fail(Errc::GeneratorUnavailable, std::string("malformed generator response: ") + e.what());
  }
}

ProcessGenerator::ProcessGenerator(std::string command) : command_(std::move(command)) {}

std::string ProcessGenerator::generate(const GenerationRequest& request) {
  namespace fs = std::filesystem;
  static std::atomic<std::uint64_t> counter{0};
  const auto stem = "seamline-gen-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto in_path = fs::temp_directory_path() / (stem + ".in.json");
  const auto out_path = fs::temp_directory_path() / (stem + ".out.json");
  write_text_file(in_path, generation_request_json(request));
  const auto cmd = "(" + command_ + ") < '" + in_path.string() + "' > '" + out_path.string() + "'";
  const int status = std::system(cmd.c_str());
  std::string body;
  if (status == 0) {
    try {
      body = read_text_file(out_path);
    } catch (const Error&) {
    }
  }
  std::error_code ec;
  fs::remove(in_path, ec);
  fs::remove(out_path, ec);
  if (status != 0) fail(Errc::GeneratorUnavailable, "generator command exited with status " + std::to_string(status));
  return parse_generation_response(body);
}

HttpGenerator::HttpGenerator(std::string base_url) : base_url_(std::move(base_url)) {}

std::string HttpGenerator::generate(const GenerationRequest& request) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(10);
  client.set_read_timeout(300);
  auto res = client.Post("/generate", generation_request_json(request), "application/json");
  if (!res) fail(Errc::GeneratorUnavailable, "cannot reach generator at " + base_url_);
  if (res->status != 200) {
    fail(Errc::GeneratorUnavailable, "generator returned HTTP " + std::to_string(res->status));
  }
  return parse_generation_response(res->body);
}

std::unique_ptr<SentenceGenerator> make_generator(const std::string& spec, std::uint64_t seed) {
  if (spec == "mock") return std::make_unique<MockGenerator>(seed);
  if (spec == "mock:duplicate") return std::make_unique<MockGenerator>(seed, MockMode::DuplicateSentence);
  if (spec == "mock:drop-ending") return std::make_unique<MockGenerator>(seed, MockMode::DropEnding);
  if (spec.starts_with("process:")) return std::make_unique<ProcessGenerator>(spec.substr(8));
  if (spec.starts_with("http://") || spec.starts_with("https://")) return std::make_unique<HttpGenerator>(spec);
  if (spec.starts_with("http:")) return std::make_unique<HttpGenerator>(spec.substr(5));
  fail(Errc::InvalidArgument, "unknown generator spec '" + spec + "'");
}

}  // namespace seamline
