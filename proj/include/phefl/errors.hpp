#ifndef PHEFL_ERRORS_HPP
#define PHEFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace phefl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad experiment configuration (invalid key, value, or combination).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset ingestion or shape problems (IDX files, empty pools, label range).
class DataError : public Error {
public:
    using Error::Error;
};

/// Precondition violation on an operation argument (dimension mismatch etc).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Weight-space aggregation failure (empty input, fingerprint mismatch).
class AggregationError : public Error {
public:
    using Error::Error;
};

/// Local training produced a non-finite loss (learning-rate divergence).
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

/// Filesystem trouble reading or writing artifact files (archives).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace phefl

#endif
