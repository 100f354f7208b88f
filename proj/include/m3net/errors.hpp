#ifndef M3NET_ERRORS_HPP_
#define M3NET_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace m3net {

/// Broken precondition: wrong dimensions, missing modality, backward without forward.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid configuration values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent cohort / model input.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss, undefined statistic, or similar numeric failure.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace m3net

#endif // M3NET_ERRORS_HPP_
