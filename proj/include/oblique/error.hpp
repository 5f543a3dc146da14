#pragma once

#include <stdexcept>
#include <string>

namespace oblique {

/// Base class of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidStateError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// Raised when a vector set is linearly dependent or exceeds the condition-number cap.
class IllConditionedBasis : public Error {
public:
    IllConditionedBasis(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class VanishingDenominator : public Error {
public:
    using Error::Error;
};

class NotFixedPoint : public Error {
public:
    NotFixedPoint(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace oblique
