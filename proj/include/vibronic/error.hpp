#pragma once

#include <stdexcept>
#include <string>

namespace vibronic {

/// Base of every exception raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, bad files, violated preconditions. The CLI maps this to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace vibronic
