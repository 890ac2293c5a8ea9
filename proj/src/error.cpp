#include "kpos/error.hpp"

namespace kpos {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DimOverflow: return "DimOverflow";
    case ErrorCode::NotInDomain: return "NotInDomain";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::ChainBroken: return "ChainBroken";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InvalidTolerance: return "InvalidTolerance";
    case ErrorCode::NoGap: return "NoGap";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotNested: return "NotNested";
    case ErrorCode::NotTransverse: return "NotTransverse";
    case ErrorCode::DimTooLarge: return "DimTooLarge";
    case ErrorCode::NotUnipotent: return "NotUnipotent";
    case ErrorCode::WordTooLong: return "WordTooLong";
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::DegenerateAngles: return "DegenerateAngles";
    case ErrorCode::SharedAxis: return "SharedAxis";
    case ErrorCode::InvalidGroup: return "InvalidGroup";
    case ErrorCode::NotHomomorphism: return "NotHomomorphism";
    case ErrorCode::MissingFlagPiece: return "MissingFlagPiece";
    case ErrorCode::NotBlockDiagonal: return "NotBlockDiagonal";
    case ErrorCode::ConstructionFailed: return "ConstructionFailed";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace kpos
