#include "gwm/error.hpp"

namespace gwm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::ZeroWeight: return "ZeroWeight";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteLogit: return "NonFiniteLogit";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::AllDegenerate: return "AllDegenerate";
    case ErrorKind::SpriteOutOfBounds: return "SpriteOutOfBounds";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

int Error::exit_code() const {
  switch (kind_) {
    case ErrorKind::ConfigError:
    case ErrorKind::UnknownPreset:
    case ErrorKind::KTooLarge:
    case ErrorKind::EmptyDataset:
    case ErrorKind::ModeMismatch:
    case ErrorKind::SpriteOutOfBounds:
      return 2;
    case ErrorKind::BadMagic:
    case ErrorKind::TruncatedFile:
    case ErrorKind::NonFiniteValue:
    case ErrorKind::DimensionOverflow:
    case ErrorKind::IoFailure:
    case ErrorKind::DimensionMismatch:
      return 3;
    case ErrorKind::ZeroWeight:
    case ErrorKind::SingularSystem:
    case ErrorKind::DivergedLoss:
    case ErrorKind::EigenFailure:
    case ErrorKind::NonFiniteLogit:
    case ErrorKind::AllDegenerate:
      return 4;
  }
  return 1;
}

}  // namespace gwm
