#pragma once

#include <stdexcept>
#include <string>

namespace gridco {

// Base for every error raised by the library. CLI exit codes are derived
// from the concrete type (see tools/cli.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document (case file, config, bids, checkpoint).
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// A clearing or planning problem with no feasible point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Solver gave up (iteration limit, numerical breakdown, unbounded model).
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace gridco
