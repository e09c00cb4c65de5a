// Copyright 2026 The Palmsense Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PALMSENSE_ERROR_H_
#define PALMSENSE_ERROR_H_

#include <stdexcept>
#include <string>

namespace palmsense {

// Base of every error the library throws. Callers that only need to report
// failures catch this; callers that need to branch catch the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument value (out of range, wrong shape, non power of two, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input data unusable for the requested operation (too short, empty, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public InputError {
 public:
  using InputError::InputError;
};

// Object in a state that forbids the operation (e.g. windowing twice).
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed container or file envelope.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedEncodingError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Training data that cannot define a binary classifier.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace palmsense

#endif  // PALMSENSE_ERROR_H_
