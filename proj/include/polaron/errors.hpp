#pragma once

#include <stdexcept>
#include <string>

namespace polaron {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridError : Error {
  using Error::Error;
};

struct RoleError : Error {
  using Error::Error;
};

struct NormalizationError : Error {
  NormalizationError(const std::string& what, double measured)
      : Error(what), norm(measured) {}
  double norm;
};

struct ConvergenceError : Error {
  using Error::Error;
};

struct ResolutionError : Error {
  using Error::Error;
};

// distance to the manifold exceeded the operational neighborhood
struct ProjectionRefused : Error {
  ProjectionRefused(const std::string& what, double d) : Error(what), distance(d) {}
  double distance;
};

struct AdmissibilityError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& what, std::string k) : Error(what), key(std::move(k)) {}
  std::string key;
};

}  // namespace polaron
