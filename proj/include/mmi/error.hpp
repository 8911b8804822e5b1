#pragma once

#include <stdexcept>
#include <string>

namespace mmi {

enum class Errc {
  MissingColumn,
  NonNumericCell,
  TooFewRows,
  EmptyModel,
  NegativeInstrumentValue,
  ThetaOutOfBox,
  InfeasibleRestriction,
  NoFiniteValue,
  KappaTooSmall,
  QuantileExceedsRoot,
  GammaOutOfRange,
  EmptyGrid,
  InvalidArgument,
  UnknownKey,
  TypeMismatch,
  MissingRequired,
  Io,
};

const char* to_string(Errc code) noexcept;

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Config errors map to exit code 2, data errors to 3.
  bool is_config_error() const noexcept {
    return code_ == Errc::UnknownKey || code_ == Errc::TypeMismatch ||
           code_ == Errc::MissingRequired || code_ == Errc::InvalidArgument ||
           code_ == Errc::KappaTooSmall || code_ == Errc::GammaOutOfRange ||
           code_ == Errc::EmptyGrid || code_ == Errc::InfeasibleRestriction ||
           code_ == Errc::QuantileExceedsRoot;
  }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::EmptyModel: return "EmptyModel";
    case Errc::NegativeInstrumentValue: return "NegativeInstrumentValue";
    case Errc::ThetaOutOfBox: return "ThetaOutOfBox";
    case Errc::InfeasibleRestriction: return "InfeasibleRestriction";
    case Errc::NoFiniteValue: return "NoFiniteValue";
    case Errc::KappaTooSmall: return "KappaTooSmall";
    case Errc::QuantileExceedsRoot: return "QuantileExceedsRoot";
    case Errc::GammaOutOfRange: return "GammaOutOfRange";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::MissingRequired: return "MissingRequired";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace mmi
