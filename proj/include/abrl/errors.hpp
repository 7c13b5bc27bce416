#pragma once

#include <stdexcept>
#include <string>

namespace abrl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Chain has no unique stationary distribution (reducible / multiple
// recurrent classes).
struct NonErgodicChain : Error {
  using Error::Error;
};

// Anchored linear solve is numerically singular.
struct SingularSystem : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Feature matrix violates the linear-independence assumption.
struct RankDeficientBasis : Error {
  using Error::Error;
};

// The two closed-form routes for the projected Bellman error disagree;
// indicates an implementation bug, not bad input.
struct IdentityMismatch : Error {
  using Error::Error;
};

struct InvalidState : Error {
  using Error::Error;
};

struct WidthUnderflow : Error {
  using Error::Error;
};

struct InvalidAction : Error {
  using Error::Error;
};

// A stochastic iterate left the finite range.
struct NonFiniteUpdate : Error {
  using Error::Error;
};

// Estimator bank used before its burn-in completed.
struct ColdEstimatorBank : Error {
  using Error::Error;
};

struct SingularA : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace abrl
