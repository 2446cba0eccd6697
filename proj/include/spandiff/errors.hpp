#pragma once

#include <stdexcept>
#include <string>

namespace spandiff {

/// Base of every error raised by the library. `kind()` names the failure
/// class so CLI diagnostics can print it without RTTI tricks.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), detail_(what) {}
  const std::string& kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string kind_;
  std::string detail_;
};

#define SPANDIFF_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

SPANDIFF_DEFINE_ERROR(InvalidInterval)
SPANDIFF_DEFINE_ERROR(DegenerateSpans)
SPANDIFF_DEFINE_ERROR(InvalidSchedule)
SPANDIFF_DEFINE_ERROR(ShapeError)
SPANDIFF_DEFINE_ERROR(InvalidStepOrder)
SPANDIFF_DEFINE_ERROR(InvalidDimension)
SPANDIFF_DEFINE_ERROR(EmptyInput)
SPANDIFF_DEFINE_ERROR(NumericalError)
SPANDIFF_DEFINE_ERROR(TooManyTargets)
SPANDIFF_DEFINE_ERROR(NoTargets)
SPANDIFF_DEFINE_ERROR(MissingField)
SPANDIFF_DEFINE_ERROR(MalformedInterval)
SPANDIFF_DEFINE_ERROR(SaliencyLengthMismatch)
SPANDIFF_DEFINE_ERROR(MissingFeatureFile)
SPANDIFF_DEFINE_ERROR(DimMismatch)
SPANDIFF_DEFINE_ERROR(ConfigError)
SPANDIFF_DEFINE_ERROR(CheckpointError)

#undef SPANDIFF_DEFINE_ERROR

}  // namespace spandiff
