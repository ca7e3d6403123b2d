#pragma once

#include <stdexcept>
#include <string>

namespace spiro {

// Base for every error raised by the library. kind() is a stable tag used in
// the CLI's JSON error records.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define SPIRO_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                          \
    using Error::Error;                                             \
    const char* kind() const noexcept override { return #Name; }   \
  }

SPIRO_DEFINE_ERROR(InvalidCurve);
SPIRO_DEFINE_ERROR(NonMonotonicVolume);
SPIRO_DEFINE_ERROR(InvalidArgument);
SPIRO_DEFINE_ERROR(DegenerateCurve);
SPIRO_DEFINE_ERROR(EmptyPhase);
SPIRO_DEFINE_ERROR(ShapeError);
SPIRO_DEFINE_ERROR(PlanViolation);
SPIRO_DEFINE_ERROR(InvalidParams);
SPIRO_DEFINE_ERROR(EmptySequence);
SPIRO_DEFINE_ERROR(NotTrained);
SPIRO_DEFINE_ERROR(InvalidDistribution);
SPIRO_DEFINE_ERROR(DegenerateLabels);
SPIRO_DEFINE_ERROR(InvalidLoss);
SPIRO_DEFINE_ERROR(UndefinedMetric);
SPIRO_DEFINE_ERROR(EmptyGroup);
SPIRO_DEFINE_ERROR(InvalidSpec);
SPIRO_DEFINE_ERROR(ValidationError);

#undef SPIRO_DEFINE_ERROR

// Malformed input row; row() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  const char* kind() const noexcept override { return "ParseError"; }
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace spiro
