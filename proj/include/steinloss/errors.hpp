#pragma once

#include <stdexcept>
#include <string>

namespace steinloss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A finite-difference stencil reached into the declared singular set of a field.
struct StencilOnSingularity : Error {
  using Error::Error;
};

struct UnknownField : Error {
  using Error::Error;
};

// Shrinkage estimators are undefined at x = 0; surfaced, never silently mapped to the MLE.
struct ShrinkageSingularity : Error {
  using Error::Error;
};

struct MissingStatistic : Error {
  using Error::Error;
};

struct InvalidMarginal : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct InvalidPenalty : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace steinloss
