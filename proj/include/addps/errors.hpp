#pragma once

#include <stdexcept>
#include <string>

namespace addps {

enum class Errc {
  NotSquare,
  NotSPD,
  UnsupportedPrimitive,
  NonFiniteForward,
  NonFiniteGradient,
  NonFiniteLoss,
  NonFiniteState,
  DimensionMismatch,
  ZeroSignal,
  NotNormalized,
  SingularSystem,
  StepOutOfRange,
  TerminalNotNoisy,
  TooFewSamples,
  ParseError,
  ValidationError,
  IoError,
};

const char* errc_name(Errc c);

/// All library failures are reported as Error with a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

/// True for parse/validation errors (CLI exit code 2); everything else is a
/// numeric failure (exit code 3).
inline bool is_config_error(Errc c) {
  return c == Errc::ParseError || c == Errc::ValidationError;
}

}  // namespace addps
