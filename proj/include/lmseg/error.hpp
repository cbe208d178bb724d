#pragma once

#include <stdexcept>
#include <string>

namespace lmseg {

/// Base of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tag, corpus line, gazetteer entry or grammar row.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input whose content is inconsistent (duplicate word,
/// concatenation mismatch, overlapping splits, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A view or metric needs finer labels than the analysis carries.
class GranularityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective or weights during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmseg
