#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace fruitmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  /// Short machine-readable tag, e.g. "degenerate".
  virtual std::string kind() const { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "invalid_argument"; }
};

/// Point sets that do not determine a sphere (coplanar, collinear, repeated).
class DegenerateError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "degenerate"; }
};

class InsufficientPointsError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "insufficient_points"; }
};

class FitFailedError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "fit_failed"; }
};

/// Scene constraints could not be met within the retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "generation"; }
};

class BundleError : public Error {
 public:
  enum class Kind {
    kMissingFile,
    kMalformed,
    kTruncated,
    kDimensionMismatch,
    kInvalidPose,
    kInvalidDepth,
    kUnitMismatch,
    kMissingGroundTruth,
  };

  BundleError(Kind kind, const std::string& message, std::optional<int> frame_id = std::nullopt);

  Kind bundle_kind() const { return kind_; }
  std::optional<int> frame_id() const { return frame_id_; }
  std::string kind() const override;

 private:
  Kind kind_;
  std::optional<int> frame_id_;
};

}  // namespace fruitmap
