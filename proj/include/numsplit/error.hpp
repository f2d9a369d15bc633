// error.hpp - exception types shared by all numsplit modules

#pragma once

#include <stdexcept>
#include <string>

namespace numsplit {

// Invalid user input: malformed config, bad units, violated preconditions.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to deliver a trustworthy answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace numsplit
