#include "corrbin/error.hpp"

namespace corrbin {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfTruncation: return "index-out-of-truncation";
    case ErrorCode::IndexUnknown: return "index-unknown";
    case ErrorCode::NoClosedForm: return "no-closed-form";
    case ErrorCode::UnsupportedKind: return "unsupported-kind";
    case ErrorCode::LengthMismatch: return "length-mismatch";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::InconsistentSequences: return "inconsistent-sequences";
    case ErrorCode::LevelCoincidesWithNode: return "level-coincides-with-node";
    case ErrorCode::UnknownLeaf: return "unknown-leaf";
    case ErrorCode::ModeUnsupported: return "mode-unsupported";
    case ErrorCode::TruncationMissing: return "truncation-missing";
    case ErrorCode::PatternSpaceTooLarge: return "pattern-space-too-large";
    case ErrorCode::EnumerationTooLarge: return "enumeration-too-large";
    case ErrorCode::CovarianceSignViolation: return "covariance-sign-violation";
    case ErrorCode::WitnessIncomplete: return "witness-incomplete";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace corrbin
