#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seamline {

enum class Errc {
  EmptyText,
  UnlabeledSentence,
  Parse,
  Schema,
  EmptyCorpus,
  SourceTooShort,
  GeneratorUnavailable,
  EmptySentence,
  CacheMismatch,
  Transport,
  Protocol,
  SingleClassCorpus,
  DimensionMismatch,
  NonFiniteLoss,
  PositionOutOfRange,
  TooFewSentences,
  EmptyTruth,
  Domain,
  TooFewGroups,
  SinglePrompt,
  Io,
  InvalidArgument,
};

std::string_view errc_name(Errc code);

/// Every failure raised by the library carries one of the Errc kinds so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace seamline
