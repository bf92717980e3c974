// Copyright 2026 The gssd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GSSD_ERROR_HPP_
#define GSSD_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gssd {

/// Runtime failure (I/O, non-convergence, degenerate data).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Caller violated a precondition (bad sizes, bad parameter values).
/// The CLI maps this to a usage error (exit code 2).
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

}  // namespace gssd

#endif  // GSSD_ERROR_HPP_
