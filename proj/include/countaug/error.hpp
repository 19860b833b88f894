// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace countaug {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file could not be opened, read or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input parsed but violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Binary payload (DMAPv1, CEMBv1, PNG, base64) is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Caller passed an argument outside an operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace countaug
