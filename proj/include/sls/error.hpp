#pragma once

#include <stdexcept>
#include <string>

namespace sls {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

// Gram matrix is not numerically positive definite (rank-deficient design).
struct SingularGram : Error {
    using Error::Error;
};

// ell(c) - 1 never changes sign on (0, c_max].
struct NoRootInRange : Error {
    using Error::Error;
};

struct NonFiniteScale : Error {
    using Error::Error;
};

struct DegenerateDirection : Error {
    using Error::Error;
};

struct InsufficientPoints : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& path, const std::string& reason)
        : Error(path.empty() ? reason : path + ": " + reason), field(path) {}
    std::string field;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace sls
