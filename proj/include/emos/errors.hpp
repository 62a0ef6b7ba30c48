#pragma once

#include <stdexcept>
#include <string>

namespace emos {

// Input/contract errors map to CLI exit code 1, numeric failures to 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidParameter : public InputError {
public:
    using InputError::InputError;
};

class InvalidObservation : public InputError {
public:
    using InputError::InputError;
};

class UndefinedMoment : public InputError {
public:
    using InputError::InputError;
};

class UndefinedSkill : public InputError {
public:
    using InputError::InputError;
};

class InsufficientData : public InputError {
public:
    using InputError::InputError;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& what, long line)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace emos
