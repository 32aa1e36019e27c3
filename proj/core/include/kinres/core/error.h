// Copyright 2026 The kinres Authors
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

#ifndef KINRES_CORE_ERROR_H_
#define KINRES_CORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace kinres {

// Base for all library errors. Subclasses carry the failure category so the
// CLI can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or invariant on a caller-supplied value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. The message names the file and record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable file.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared in a simulation or training loop.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinres

#endif  // KINRES_CORE_ERROR_H_
