#pragma once

#include <stdexcept>
#include <string>

namespace ericson {

// Base of every error thrown by the library. Callers that only care about
// "something went wrong in ericson" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument: negative parameter, empty grid, out-of-range index.
class DomainError : public Error {
public:
    using Error::Error;
};

// Mismatched or zero matrix dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Linear solve or eigendecomposition failed.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double rcond = 0.0)
        : Error(what), rcond_(rcond) {}
    double rcond() const noexcept { return rcond_; }

private:
    double rcond_;
};

// Graph Hamiltonian evaluated too close to a bond singularity sin(kL) = 0.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, int bond)
        : Error(what), bond_(bond) {}
    int bond() const noexcept { return bond_; }

private:
    int bond_;
};

// Correlation function never drops below the threshold inside max_lag.
class WidthNotResolved : public Error {
public:
    using Error::Error;
};

// Invalid run configuration or malformed input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ericson
