#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jawgrasp {

enum class ErrorCode {
  DegenerateFace,
  EmptyMesh,
  Degenerate,
  InsufficientPoints,
  ParseError,
  UnsupportedFormat,
  InvalidDimensions,
  InvalidArgument,
  ContactOffSurface,
  InsufficientBin,
  TooFewPoints,
  ShapeMismatch,
  EmptyDataset,
  LabelOutOfRange,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every domain failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input file. `location` is a 1-based line number for text formats
/// and a byte offset for binary ones.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t location, const std::string& what)
      : Error(ErrorCode::ParseError, file + ":" + std::to_string(location) + ": " + what),
        file_(file),
        location_(location) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t location() const noexcept { return location_; }

 private:
  std::string file_;
  std::size_t location_;
};

/// A q_fc bin had fewer eligible grasps than the requested quota.
class InsufficientBinError : public Error {
 public:
  InsufficientBinError(double bin, std::size_t have, std::size_t need, const std::string& what)
      : Error(ErrorCode::InsufficientBin, what), bin_(bin), have_(have), need_(need) {}

  double bin() const noexcept { return bin_; }
  std::size_t have() const noexcept { return have_; }
  std::size_t need() const noexcept { return need_; }

 private:
  double bin_;
  std::size_t have_;
  std::size_t need_;
};

}  // namespace jawgrasp
