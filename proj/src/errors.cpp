#include "addps/errors.hpp"

namespace addps {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NotSquare: return "NotSquare";
    case Errc::NotSPD: return "NotSPD";
    case Errc::UnsupportedPrimitive: return "UnsupportedPrimitive";
    case Errc::NonFiniteForward: return "NonFiniteForward";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroSignal: return "ZeroSignal";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::StepOutOfRange: return "StepOutOfRange";
    case Errc::TerminalNotNoisy: return "TerminalNotNoisy";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace addps
