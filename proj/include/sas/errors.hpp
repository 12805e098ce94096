#pragma once

#include <stdexcept>
#include <string>

namespace sas {

enum class ErrorCode {
  OutOfDomain,
  OutOfRange,
  InvalidParams,
  DegenerateNodes,
  InsufficientHistory,
  NonConstantTau,
  NonVPSchedule,
  InvalidEta,
  DimensionMismatch,
  GridTooShort,
  PathCoverage,
  NonAffineModel,
  InsufficientLevels,
  ParseError,
  UnknownKey,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace sas
