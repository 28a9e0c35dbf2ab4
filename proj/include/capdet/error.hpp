#pragma once

#include <stdexcept>
#include <string>

namespace capdet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
public:
    GridMismatch() : Error("wave functions live on different grids") {}
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised when a numerical procedure fails to meet its own contract
/// (non-convergence, failed factorisation, norm growth).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace capdet
