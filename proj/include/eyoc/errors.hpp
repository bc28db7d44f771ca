#pragma once

#include <stdexcept>
#include <string>

namespace eyoc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateConfiguration : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};
struct ArityMismatch : Error {
  using Error::Error;
};
struct EmptyCorrespondences : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct OutOfRange : Error {
  using Error::Error;
};
struct SequenceTooShort : Error {
  using Error::Error;
};
struct NoPairInRange : Error {
  using Error::Error;
};
struct MalformedFile : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct SingleCandidate : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct AllFiltered : Error {
  using Error::Error;
};
struct CoincidentPoint : Error {
  using Error::Error;
};
struct TooFewCorrespondences : Error {
  using Error::Error;
};
struct RegistrationFailed : Error {
  using Error::Error;
};
struct SkipPair : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace eyoc
