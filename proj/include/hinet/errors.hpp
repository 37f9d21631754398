#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace hinet {

enum class ErrorCode {
  DuplicateName,
  UnknownNodeType,
  UnknownEdgeType,
  UnknownProperty,
  UnknownSensor,
  KindMismatch,
  ModeMismatch,
  SignatureMismatch,
  SchemaFrozen,
  SchemaNotFrozen,
  TypeMismatch,
  DuplicateInstanceId,
  GenerationDepthExceeded,
  OwnerMismatch,
  SensorFailure,
  UnknownInstance,
  EmptyAggregate,
  ParseError,
  PlanError,
  EmptyTrainingSet,
  EmptyTestSet,
  DuplicateParameter,
  EmptyFamily,
  UnboundVariable,
  UntrainedClassifier,
  RaggedRow,
  DuplicateId,
  ParseFailure,
  ParameterOutOfRange,
  ConfigError,
  IoError,
};

const char* error_code_name(ErrorCode code);

// Position of an error inside a source text, 1-based line/column plus the
// absolute byte offset.
struct TextPosition {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t offset = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  Error(ErrorCode code, std::string message, TextPosition pos)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message +
                           " (line " + std::to_string(pos.line) + ", col " +
                           std::to_string(pos.column) + ")"),
        code_(code),
        position_(pos) {}

  ErrorCode code() const { return code_; }
  const std::optional<TextPosition>& position() const { return position_; }

 private:
  ErrorCode code_;
  std::optional<TextPosition> position_;
};

[[noreturn]] inline void raise(ErrorCode code, std::string message) {
  throw Error(code, std::move(message));
}

[[noreturn]] inline void raise(ErrorCode code, std::string message,
                               TextPosition pos) {
  throw Error(code, std::move(message), pos);
}

}  // namespace hinet
