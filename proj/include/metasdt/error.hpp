#pragma once

#include <stdexcept>
#include <string>

namespace metasdt {

// Base class for all domain errors raised by the library. Precondition
// violations on plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an estimate is numerically meaningless, e.g. an M-ratio whose
// denominator d' is effectively zero.
class UnstableEstimate : public Error {
 public:
  using Error::Error;
};

// Two trial records share the same (model, dataset, temperature, question) key.
class DuplicateRecord : public Error {
 public:
  using Error::Error;
};

}  // namespace metasdt
