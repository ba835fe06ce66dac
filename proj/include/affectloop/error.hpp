#pragma once

#include <stdexcept>
#include <string>

namespace affectloop {

// Root of every error the library throws. Subclasses name the failing stage so
// front ends can map them to exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Value outside the domain an operation accepts (non-finite, negative time...).
class DomainError : public Error {
public:
  using Error::Error;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

class FusionError : public Error {
public:
  using Error::Error;
};

class ClassificationError : public Error {
public:
  using Error::Error;
};

// Level generation could not place a block anywhere at an open anchor.
class GenerationError : public Error {
public:
  using Error::Error;
};

class LogError : public Error {
public:
  using Error::Error;
};

// Malformed text input (event lists, traces, calibration files, configs).
class InputError : public Error {
public:
  using Error::Error;
};

// AV trace does not span an event's time region.
class CoverageError : public Error {
public:
  using Error::Error;
};

class LoadError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace affectloop
