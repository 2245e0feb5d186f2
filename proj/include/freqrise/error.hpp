#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace freqrise {

// Base of every error thrown by the library. The concrete type names the
// failure kind; what() carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FREQRISE_DEFINE_ERROR(Name)              \
  class Name : public Error {                    \
   public:                                       \
    using Error::Error;                          \
  };

FREQRISE_DEFINE_ERROR(InvalidArgument)
FREQRISE_DEFINE_ERROR(InvalidSignal)
FREQRISE_DEFINE_ERROR(ShapeError)
FREQRISE_DEFINE_ERROR(InvalidWindow)
FREQRISE_DEFINE_ERROR(InvalidGrid)
FREQRISE_DEFINE_ERROR(InvalidSubset)
FREQRISE_DEFINE_ERROR(UnsupportedWav)
FREQRISE_DEFINE_ERROR(CorruptWav)
FREQRISE_DEFINE_ERROR(TooLong)
FREQRISE_DEFINE_ERROR(TooLargeToEnumerate)
FREQRISE_DEFINE_ERROR(UndefinedMetric)
FREQRISE_DEFINE_ERROR(EndpointError)
FREQRISE_DEFINE_ERROR(FormatError)

#undef FREQRISE_DEFINE_ERROR

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class ExplainFailed : public Error {
 public:
  ExplainFailed(std::size_t mask_index, const std::string& what)
      : Error(what), mask_index_(mask_index) {}
  std::size_t mask_index() const noexcept { return mask_index_; }

 private:
  std::size_t mask_index_;
};

}  // namespace freqrise
