//------------------------------------------------------------------------------
//
//   Copyright 2026 The Timeboost Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace timeboost {

/// Caller supplied a value outside the documented domain (negative bid, g <= 0, ...).
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Same transaction id pushed twice into a queue.
class DuplicateTransaction : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A stateful API was driven in an order it does not allow (clock regression etc).
class ContractViolation : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

/// Parameters are valid numbers but outside the model the solver is defined for.
class OutOfDomain : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Numerical routine could not bracket or converge.
class SolverFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed external input (file, wire record) with location information.
class ParseError : public std::runtime_error
{
public:
  ParseError(std::string const &what, std::size_t line = 0)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what)
    , line_(line)
  {}

  std::size_t line() const noexcept
  {
    return line_;
  }

private:
  std::size_t line_;
};

}  // namespace timeboost
