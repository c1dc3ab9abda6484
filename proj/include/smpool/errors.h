// Copyright 2026 The smpool Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace smpool {

// Base class for every error the library raises. The CLI maps these to
// exit code 2 (usage/config error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Window geometry that yields no output positions, or non-positive knobs.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Invalid MomentSpec (order out of range, unguarded n >= 3 without norm, ...).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Operand shapes that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed TensorFile or failed tensor I/O.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A forward closure returned different bits for the same input.
class NondeterminismError : public Error {
 public:
  using Error::Error;
};

}  // namespace smpool
