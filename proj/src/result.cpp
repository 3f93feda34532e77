#include "motioncal/result.hpp"

namespace motioncal {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NearIdentity: return "NearIdentity";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::DegenerateAxes: return "DegenerateAxes";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientScans: return "InsufficientScans";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::TooFewMatches: return "TooFewMatches";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::CheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::NoVisiblePoints: return "NoVisiblePoints";
    case ErrorCode::TrackerFailure: return "TrackerFailure";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InitializationFailed: return "InitializationFailed";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace motioncal
