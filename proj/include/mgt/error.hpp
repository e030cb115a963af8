#pragma once

#include <stdexcept>
#include <string>

namespace mgt {

// Base for every failure raised by the library. Callers that only care about
// "did the numerics go wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: wrong dimensions, bad selectors, out-of-range parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Finite element assembly failure (degenerate element and the like).
class AssemblyError : public Error {
public:
    using Error::Error;
};

// A numerical check tripped at runtime: blowup, symmetry drift, singular G(t).
class NumericalError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

} // namespace mgt
