#pragma once

#include <stdexcept>
#include <string>

namespace ruclab {

/// Base class for all ruclab errors.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape/arity problems: dimension mismatch, empty net, empty family.
class structural_error : public error {
public:
  using error::error;
};

/// A numeric argument is outside its admissible range (p < 1, t < 0, budget 0, ...).
class invalid_parameter : public error {
public:
  using error::error;
};

/// Matrix offered as a generator has a negative off-diagonal entry.
class invalid_generator : public error {
public:
  using error::error;
};

/// Resolvent requested at or left of the spectral bound.
class resolvent_undefined : public error {
public:
  using error::error;
};

/// A stated precondition does not hold for the given data.
class precondition_error : public error {
public:
  using error::error;
};

/// Requested feature is below what the grid can resolve.
class resolution_error : public error {
public:
  using error::error;
};

/// Sampled net values are not finite / not order bounded.
class order_unbounded : public error {
public:
  using error::error;
};

/// An iterative numeric procedure failed to converge.
class numerical_error : public error {
public:
  using error::error;
};

} // namespace ruclab
