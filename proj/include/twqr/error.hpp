#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twqr {

enum class ErrorCode {
  IoError,
  MissingColumn,
  ParseFailure,
  DuplicateCell,
  EmptyFile,
  InvalidTau,
  InvalidConfig,
  DimensionMismatch,
  RankDeficient,
  NonFinite,
  DegenerateScale,
  DegenerateDesign,
  NonpositiveBandwidth,
  ZeroBias,
  TooFewClusters,
  SingularJacobian,
  ZeroStdError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InvalidTau: return "InvalidTau";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::NonpositiveBandwidth: return "NonpositiveBandwidth";
    case ErrorCode::ZeroBias: return "ZeroBias";
    case ErrorCode::TooFewClusters: return "TooFewClusters";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::ZeroStdError: return "ZeroStdError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. what() reads "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Throws InvalidTau unless 0 < tau < 1.
void require_valid_tau(double tau);

}  // namespace twqr
