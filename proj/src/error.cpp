#include "ifpsync/error.hpp"

namespace ifpsync {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::ZeroPolynomial: return "ZeroPolynomial";
    case ErrorCode::ImproperTransferFunction: return "ImproperTransferFunction";
    case ErrorCode::PoleOnAxis: return "PoleOnAxis";
    case ErrorCode::NotCertifiable: return "NotCertifiable";
    case ErrorCode::BOutOfRange: return "BOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CertificateFailed: return "CertificateFailed";
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::HistoryUnderflow: return "HistoryUnderflow";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::MuTauViolation: return "MuTauViolation";
  }
  return "Unknown";
}

}  // namespace ifpsync
