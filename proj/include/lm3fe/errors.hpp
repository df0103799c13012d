#pragma once

#include <stdexcept>
#include <string>

namespace lm3fe {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions do not agree.
class ShapeError : public Error
{
public:
    using Error::Error;
};

/// An input value is outside its admissible set (labels, fractions, configs).
class ValueError : public Error
{
public:
    using Error::Error;
};

/// A sample whose concatenated feature vector is identically zero.
class DegenerateSampleError : public ValueError
{
public:
    using ValueError::ValueError;
};

/// A scalar argument outside the domain of a formula (e.g. non-positive norm).
class DomainError : public Error
{
public:
    using Error::Error;
};

/// A solver produced a non-finite objective value.
class DivergenceError : public Error
{
public:
    using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace lm3fe
