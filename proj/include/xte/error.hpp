#pragma once

#include <stdexcept>
#include <string>

namespace xte {

enum class ErrorCode {
  DuplicateEdge,
  SelfLoop,
  FeatureDimMismatch,
  InvalidMask,
  TooLarge,
  SyntaxError,
  UnboundVariable,
  DepthExceeded,
  BudgetExceeded,
  EmptyRegion,
  BadParams,
  IoError,
  SchemaError,
  ShapeMismatch,
  DomainError,
  NotScalar,
  NonFinite,
  EmptyGraph,
  AllWeightsDropped,
  Internal,
};

const char* error_code_name(ErrorCode code);

// Validation errors map to exit code 2 in the CLI; everything else is internal.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xte
