#ifndef IMAGLS_ERRORS_H_
#define IMAGLS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace imagls {

// Bad user input: malformed files, out-of-range parameters, mismatched shapes.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class WeightSumError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class GramCheckError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Valid input that the numerics cannot handle (non-finite loss, zero band
// energy, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imagls

#endif  // IMAGLS_ERRORS_H_
