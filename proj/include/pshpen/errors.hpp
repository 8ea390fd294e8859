#pragma once

#include <stdexcept>
#include <string>

namespace pshpen {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define PSHPEN_DEFINE_ERROR(Name)        \
  struct Name : Error {                  \
    using Error::Error;                  \
  };

// data validation
PSHPEN_DEFINE_ERROR(NonPositiveTime)
PSHPEN_DEFINE_ERROR(DimensionMismatch)
PSHPEN_DEFINE_ERROR(UnknownStatusCode)
PSHPEN_DEFINE_ERROR(DataError)

// censoring weights
PSHPEN_DEFINE_ERROR(DegenerateStratum)
PSHPEN_DEFINE_ERROR(ZeroDenominator)

// objective / solver
PSHPEN_DEFINE_ERROR(NumericOverflow)
PSHPEN_DEFINE_ERROR(SingularSystem)
PSHPEN_DEFINE_ERROR(UnpenalizedFitRequired)

// inference
PSHPEN_DEFINE_ERROR(EmptyActiveSet)

// simulation
PSHPEN_DEFINE_ERROR(InversionFailure)

// prognostics
PSHPEN_DEFINE_ERROR(NoEvaluablePairs)
PSHPEN_DEFINE_ERROR(DegeneratePI)
PSHPEN_DEFINE_ERROR(HorizonBeyondSupport)
PSHPEN_DEFINE_ERROR(HighStratificationUnsupported)
PSHPEN_DEFINE_ERROR(MissingFactor)

// cli / config
PSHPEN_DEFINE_ERROR(ConfigError)

#undef PSHPEN_DEFINE_ERROR

}  // namespace pshpen
