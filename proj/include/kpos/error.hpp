#pragma once

#include <stdexcept>
#include <string>

namespace kpos {

enum class ErrorCode {
  DimMismatch,
  DimOverflow,
  NotInDomain,
  BadPartition,
  NotUnimodular,
  ChainBroken,
  Singular,
  InvalidTolerance,
  NoGap,
  NotConverged,
  IndexOutOfRange,
  NotNested,
  NotTransverse,
  DimTooLarge,
  NotUnipotent,
  WordTooLong,
  NotHyperbolic,
  DegenerateAngles,
  SharedAxis,
  InvalidGroup,
  NotHomomorphism,
  MissingFlagPiece,
  NotBlockDiagonal,
  ConstructionFailed,
  ConfigError,
  Io,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace kpos
