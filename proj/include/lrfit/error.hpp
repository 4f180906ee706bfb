#pragma once

#include <stdexcept>
#include <string>

namespace lrfit
{

/// Base class for all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: files, labels, flags, configuration values.
class InputError : public Error
{
public:
  using Error::Error;
};

/// A requested mesh refinement is illegal (splits nothing, bad endpoints,
/// unsupported knot multiplicity).
class RefinementError : public Error
{
public:
  using Error::Error;
};

/// The linear solve behind least squares fitting failed or was refused.
class FitError : public Error
{
public:
  using Error::Error;
};

} // namespace lrfit
