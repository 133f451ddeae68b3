#pragma once

#include <stdexcept>
#include <string>

namespace obo {

enum class Errc {
  EmptyCorpus,
  InvalidFractions,
  ParseFailure,
  SiteMismatch,
  NoCandidates,
  ShapeMismatch,
  AllMasked,
  IndexOutOfRange,
  EmptyTraining,
  EmptyPath,
  Diverged,
  SingleClass,
  NotFitted,
  NotTrained,
  LengthMismatch,
  Unscorable,
  IoError,
  UsageError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::InvalidFractions: return "InvalidFractions";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::SiteMismatch: return "SiteMismatch";
    case Errc::NoCandidates: return "NoCandidates";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::AllMasked: return "AllMasked";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyTraining: return "EmptyTraining";
    case Errc::EmptyPath: return "EmptyPath";
    case Errc::Diverged: return "Diverged";
    case Errc::SingleClass: return "SingleClass";
    case Errc::NotFitted: return "NotFitted";
    case Errc::NotTrained: return "NotTrained";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Unscorable: return "Unscorable";
    case Errc::IoError: return "IoError";
    case Errc::UsageError: return "UsageError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace obo
