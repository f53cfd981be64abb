#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "seamline/synthesis.hpp"

namespace seamline {

enum class MockMode { Conforming, DuplicateSentence, DropEnding };

/// Deterministic stand-in for a language model. Fill slots receive
/// sentences built from an invented vocabulary that does not overlap
/// ordinary English, so generated and kept sentences never collide.
/// Output is a pure function of (seed, mode, request); safe to call
/// concurrently.
class MockGenerator final : public SentenceGenerator {
 public:
  explicit MockGenerator(std::uint64_t seed, MockMode mode = MockMode::Conforming);

  std::string generate(const GenerationRequest& request) override;
  bool concurrent_safe() const override { return true; }
  std::string id() const override;

 private:
  std::uint64_t seed_;
  MockMode mode_;
};

/// Runs an external command once per request. The request JSON
/// {"instructions", "directive", "max_tokens"} is piped to its standard
/// input; it must print {"text": ...} on standard output.
class ProcessGenerator final : public SentenceGenerator {
 public:
  explicit ProcessGenerator(std::string command);
  std::string generate(const GenerationRequest& request) override;
  std::string id() const override { return "process:" + command_; }

 private:
  std::string command_;
};

/// POSTs the same request JSON to <base_url>/generate.
class HttpGenerator final : public SentenceGenerator {
 public:
  explicit HttpGenerator(std::string base_url);
  std::string generate(const GenerationRequest& request) override;
  bool concurrent_safe() const override { return true; }
  std::string id() const override { return "http:" + base_url_; }

 private:
  std::string base_url_;
};

std::string generation_request_json(const GenerationRequest& request);
/// Extracts "text" from a generator response; throws GeneratorUnavailable.
std::string parse_generation_response(const std::string& body);

/// "mock", "mock:duplicate", "mock:drop-ending", "process:CMD", "http:URL"
/// or a bare http(s):// URL.
std::unique_ptr<SentenceGenerator> make_generator(const std::string& spec, std::uint64_t seed);

}  // namespace seamline
