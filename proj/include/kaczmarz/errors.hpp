#pragma once

#include <stdexcept>
#include <string>

namespace kaczmarz {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A matrix or vector entry is NaN or infinite.
struct NonFiniteError : Error {
  using Error::Error;
};

// A matrix row has zero norm; its sampling probability and projection
// would be undefined.
struct ZeroRowError : Error {
  using Error::Error;
};

// The right-hand side has zero norm, so the relative residual is undefined.
struct ZeroRhsError : Error {
  using Error::Error;
};

// Dimensions do not form a valid problem (m < 1, n < 1, m < n where required).
struct BadShapeError : Error {
  using Error::Error;
};

// A diagonal preconditioner failed the positive-definiteness requirement.
struct DegeneratePrecondError : Error {
  using Error::Error;
};

// The acceleration hyperparameter is outside its admissible range.
struct InvalidLambdaError : Error {
  using Error::Error;
};

// A fixed coefficient schedule was consumed past its end.
struct ScheduleExhaustedError : Error {
  using Error::Error;
};

// The Jacobi SVD did not converge within the sweep budget.
struct SvdFailureError : Error {
  using Error::Error;
};

// Smallest singular value is numerically zero; the matrix has no left inverse.
struct RankDeficientError : Error {
  using Error::Error;
};

// A problem instance directory could not be loaded.
struct InstanceLoadError : Error {
  using Error::Error;
};

// Generic file I/O or format failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace kaczmarz
