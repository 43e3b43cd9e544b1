#pragma once

#include <stdexcept>
#include <string>

namespace dartk {

// CLI exit-code buckets: usage errors -> 1, data/parse errors -> 2,
// numeric failures -> 3.
enum class ErrorCategory { Usage = 1, Data = 2, Numeric = 3 };

enum class Errc {
  // file ingestion
  IoFailure,
  MissingCompanionFile,
  UnsupportedEncoding,
  TruncatedData,
  ChecksumMismatch,
  CorruptFile,
  MissingChannel,
  // synthesis
  InvalidBand,
  RateMismatch,
  // preprocessing
  IrrationalRatio,
  UpsamplingUnsupported,
  TooShort,
  LengthMismatch,
  // autodiff / model
  ShapeMismatch,
  DegenerateBatch,
  NonScalarLoss,
  InvalidConfig,
  EmptySplit,
  VersionMismatch,
  // baselines
  TooFewMarkers,
  RankDeficient,
  InvalidK,
  NoConvergence,
  // metrics / stats
  ZeroRange,
  ConstantInput,
  ZeroSignal,
  ZeroVector,
  Empty,
  TooFew,
  TooMany,
  ConstantDifferences,
  // evaluation
  EmptyValidation,
  TooFewSubjects,
  // configuration
  UnknownKey,
  BadArgument,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::IoFailure: return "IoFailure";
    case Errc::MissingCompanionFile: return "MissingCompanionFile";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::MissingChannel: return "MissingChannel";
    case Errc::InvalidBand: return "InvalidBand";
    case Errc::RateMismatch: return "RateMismatch";
    case Errc::IrrationalRatio: return "IrrationalRatio";
    case Errc::UpsamplingUnsupported: return "UpsamplingUnsupported";
    case Errc::TooShort: return "TooShort";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::NonScalarLoss: return "NonScalarLoss";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TooFewMarkers: return "TooFewMarkers";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::InvalidK: return "InvalidK";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ZeroRange: return "ZeroRange";
    case Errc::ConstantInput: return "ConstantInput";
    case Errc::ZeroSignal: return "ZeroSignal";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::Empty: return "Empty";
    case Errc::TooFew: return "TooFew";
    case Errc::TooMany: return "TooMany";
    case Errc::ConstantDifferences: return "ConstantDifferences";
    case Errc::EmptyValidation: return "EmptyValidation";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::BadArgument: return "BadArgument";
  }
  return "UnknownError";
}

inline ErrorCategory errc_category(Errc c) {
  switch (c) {
    case Errc::UnknownKey:
    case Errc::BadArgument:
    case Errc::InvalidConfig:
    case Errc::InvalidK:
      return ErrorCategory::Usage;
    case Errc::NoConvergence:
    case Errc::DegenerateBatch:
    case Errc::NonScalarLoss:
    case Errc::RankDeficient:
    case Errc::ZeroRange:
    case Errc::ConstantInput:
    case Errc::ZeroSignal:
    case Errc::ZeroVector:
    case Errc::ConstantDifferences:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return errc_category(code_); }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace dartk
