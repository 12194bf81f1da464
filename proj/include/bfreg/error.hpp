#pragma once

#include <stdexcept>
#include <string>

namespace bfreg {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments: dimension mismatches, non-finite input, wrong weight counts.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// CSV / dataset / formula problems.
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed hypothesis text or unknown coefficient names.
class ParseError : public Error {
public:
    using Error::Error;
};

// A hypothesis whose constraint set is empty or self-contradictory.
class InfeasibleHypothesis : public Error {
public:
    using Error::Error;
};

// Cholesky / inversion failure on a matrix that should be positive definite.
class DecompositionError : public Error {
public:
    using Error::Error;
};

// Underflow or degenerate numeric results (zero prior density, all-zero Bayes factors).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace bfreg
