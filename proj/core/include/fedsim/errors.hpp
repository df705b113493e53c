#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// One code per failure class surfaced by the library. The CLI maps these
// onto process exit codes (parse -> 1, validation -> 2, invariant -> 3).
enum class ErrorCode {
  kConfig,
  kParse,
  kValidation,
  kShape,
  kNumeric,
  kRegistryConflict,
  kNotFound,
  kChainIntegrity,
  kDecode,
  kParameter,
  kMonitoring,
  kEvaluation,
  kDeployment,
  kCapacity,
  kAggregation,
  kCausality,
  kTopology,
  kBalanceImpossible,
  kUnrecoverableMasks,
  kIo,
  kInvariant,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kRegistryConflict: return "registry conflict";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kChainIntegrity: return "chain integrity error";
    case ErrorCode::kDecode: return "decode error";
    case ErrorCode::kParameter: return "parameter error";
    case ErrorCode::kMonitoring: return "monitoring error";
    case ErrorCode::kEvaluation: return "evaluation error";
    case ErrorCode::kDeployment: return "deployment error";
    case ErrorCode::kCapacity: return "capacity error";
    case ErrorCode::kAggregation: return "aggregation error";
    case ErrorCode::kCausality: return "causality error";
    case ErrorCode::kTopology: return "topology error";
    case ErrorCode::kBalanceImpossible: return "balancing impossible";
    case ErrorCode::kUnrecoverableMasks: return "unrecoverable masks";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kInvariant: return "invariant violation";
  }
  return "unknown error";
}

}  // namespace fedsim
