#pragma once

#include <stdexcept>

namespace fhirsculptor {

/// Bad run configuration (missing credential variable, duplicate corpus
/// ids, unknown element kind, ...). Reported before any work starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Result and gold files do not cover the same ids.
struct JoinError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fhirsculptor
