// errors.hpp - typed error conditions shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace linmed {

// Malformed external input (CSV rows, config syntax).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input violating a documented constraint (dimension mismatch,
// out-of-ball arm, unknown policy name).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Experiment configuration problems (missing file, bad key, invalid value).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An importance-weighted estimate cannot be formed (zero propensity).
class EstimatorUndefined : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A should-not-happen condition with diagnostic payload.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace linmed
