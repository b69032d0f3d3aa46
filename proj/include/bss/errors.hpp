#pragma once

#include <stdexcept>
#include <string>

namespace bss {

// Base type for every condition this library raises. Each failure mode gets
// its own subclass so callers can catch exactly what they can handle.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// linalg: pivot collapsed during inversion / solve.
struct SingularMatrix : Error { using Error::Error; };

// signal / wav front end.
struct EmptySignal : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct CorruptHeader : Error { using Error::Error; };

// mixture simulation.
struct LengthMismatch : Error { using Error::Error; };
struct SingularMixing : Error { using Error::Error; };

// separation algorithms.
struct SingularDemixing : Error { using Error::Error; };
struct SingularDiagonalizer : Error { using Error::Error; };
struct SingularUpdate : Error { using Error::Error; };
struct DegenerateCovariance : Error { using Error::Error; };

// evaluation.
struct SilentReference : Error { using Error::Error; };

// file plumbing: open/read/write failures, reported with the path.
struct IoFailure : Error { using Error::Error; };

}  // namespace bss
