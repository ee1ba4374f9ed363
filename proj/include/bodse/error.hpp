#pragma once

#include <stdexcept>
#include <string>

namespace bodse {

/// Base of every error raised by the library. Each failure mode named in the
/// public contracts has its own subclass so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BODSE_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

// param_space
BODSE_DEFINE_ERROR(InvalidSpace);
BODSE_DEFINE_ERROR(UnknownParam);
BODSE_DEFINE_ERROR(OutOfBounds);
BODSE_DEFINE_ERROR(NonIntegralValue);
BODSE_DEFINE_ERROR(DimensionMismatch);
BODSE_DEFINE_ERROR(GridTooLarge);

// gp
BODSE_DEFINE_ERROR(NotPositiveDefinite);
BODSE_DEFINE_ERROR(CacheMissing);
BODSE_DEFINE_ERROR(AllStartsFailed);

// acquisition
BODSE_DEFINE_ERROR(SpaceExhausted);

// objective
BODSE_DEFINE_ERROR(MissingReference);
BODSE_DEFINE_ERROR(ModeMismatch);
BODSE_DEFINE_ERROR(UnknownMetric);
BODSE_DEFINE_ERROR(EmptySweep);

// evaluators
BODSE_DEFINE_ERROR(UnknownBenchmark);
BODSE_DEFINE_ERROR(UnresolvedPlaceholder);

// bo_loop / baseline_ga
BODSE_DEFINE_ERROR(AllInitFailed);
BODSE_DEFINE_ERROR(EmptyLog);
BODSE_DEFINE_ERROR(InvalidConfig);
BODSE_DEFINE_ERROR(LogFormatError);

#undef BODSE_DEFINE_ERROR

}  // namespace bodse
