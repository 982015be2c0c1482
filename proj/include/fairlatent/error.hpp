/*
 * Copyright 2026 The fairlatent Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FAIRLATENT_ERROR_HPP_
#define FAIRLATENT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fairlatent {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Two directions are parallel in the reduced block space, so no combination
// cancels the stable component.
class DegenerateCombination : public Error {
 public:
  using Error::Error;
};

// Encoder training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// A metric needs a (y, s) group that has no records.
class EmptyGroup : public Error {
 public:
  using Error::Error;
};

}  // namespace fairlatent

#endif  // FAIRLATENT_ERROR_HPP_
