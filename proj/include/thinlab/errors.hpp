#pragma once

#include <stdexcept>
#include <string>

namespace thinlab {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigParseError : Error {
  using Error::Error;
};

struct UnknownProblemError : Error {
  using Error::Error;
};

struct MeshMismatchError : Error {
  using Error::Error;
};

struct DegenerateMeshError : Error {
  using Error::Error;
};

struct InvalidExponentError : Error {
  using Error::Error;
};

// Raised when the Young parameter eta makes gamma = c - eta^theta/theta
// non-positive.
struct ChooseSmallerEtaError : Error {
  using Error::Error;
};

struct EmptyEnsembleError : Error {
  using Error::Error;
};

struct EmptySampleError : Error {
  using Error::Error;
};

struct WindowOutOfRangeError : Error {
  using Error::Error;
};

struct NoAbsorptionError : Error {
  using Error::Error;
};

struct NonlinearSolveFailure : Error {
  NonlinearSolveFailure(double time_, int iterations_, double residual_)
      : Error("nonlinear solve failed at t = " + std::to_string(time_) +
              " after " + std::to_string(iterations_) +
              " iterations, residual = " + std::to_string(residual_)),
        time(time_), iterations(iterations_), residual(residual_) {}
  double time;
  int iterations;
  double residual;
};

}  // namespace thinlab
