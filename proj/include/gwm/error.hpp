#pragma once

#include <stdexcept>
#include <string>

namespace gwm {

enum class ErrorKind {
  // file / format
  BadMagic,
  TruncatedFile,
  NonFiniteValue,
  DimensionOverflow,
  IoFailure,
  // numerics
  ZeroWeight,
  SingularSystem,
  DivergedLoss,
  EigenFailure,
  // contracts
  DimensionMismatch,
  NonFiniteLogit,
  EmptyDataset,
  ModeMismatch,
  AllDegenerate,
  SpriteOutOfBounds,
  UnknownPreset,
  KTooLarge,
  ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Process exit code contract: 2 = configuration, 3 = I/O, 4 = numeric failure.
  int exit_code() const;

 private:
  ErrorKind kind_;
};

}  // namespace gwm
