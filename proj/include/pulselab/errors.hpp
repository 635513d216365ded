#pragma once

#include <stdexcept>
#include <string>

namespace pulselab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PULSELAB_ERROR(Name)                 \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  };

PULSELAB_ERROR(ConfigError)
PULSELAB_ERROR(StabilityViolation)
PULSELAB_ERROR(OrderOutOfRange)
PULSELAB_ERROR(InvalidPulse)
PULSELAB_ERROR(ResonantDenominator)
PULSELAB_ERROR(NotClosed)
PULSELAB_ERROR(IncommensurateWaveVector)
PULSELAB_ERROR(BlowUp)
PULSELAB_ERROR(MicroInstability)
PULSELAB_ERROR(EmptyBranch)
PULSELAB_ERROR(AllFiltered)
PULSELAB_ERROR(NonPositiveValue)

#undef PULSELAB_ERROR

}  // namespace pulselab
