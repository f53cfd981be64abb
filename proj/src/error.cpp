#include "seamline/error.hpp"

namespace seamline {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::EmptyText: return "EmptyText";
    case Errc::UnlabeledSentence: return "UnlabeledSentence";
    case Errc::Parse: return "ParseError";
    case Errc::Schema: return "SchemaError";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::SourceTooShort: return "SourceTooShort";
    case Errc::GeneratorUnavailable: return "GeneratorUnavailable";
    case Errc::EmptySentence: return "EmptySentence";
    case Errc::CacheMismatch: return "CacheMismatch";
    case Errc::Transport: return "Transport";
    case Errc::Protocol: return "ProtocolError";
    case Errc::SingleClassCorpus: return "SingleClassCorpus";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::PositionOutOfRange: return "PositionOutOfRange";
    case Errc::TooFewSentences: return "TooFewSentences";
    case Errc::EmptyTruth: return "EmptyTruth";
    case Errc::Domain: return "DomainError";
    case Errc::TooFewGroups: return "TooFewGroups";
    case Errc::SinglePrompt: return "SinglePrompt";
    case Errc::Io: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace seamline
