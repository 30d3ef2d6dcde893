#pragma once

#include <stdexcept>
#include <string>

namespace mtod {

// Malformed or inconsistent input data (files, references, shapes).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed arguments outside an operation's contract.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failure while running an otherwise valid computation (divergence, I/O).
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mtod
