// Copyright 2026 The DriveBench Authors. All Rights Reserved.
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
#include <utility>

namespace drivebench {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors tied to one frame and one field of a scenario manifest.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string frame_id, std::string field, const std::string& what)
      : Error(compose(frame_id, field, what)),
        frame_id_(std::move(frame_id)),
        field_(std::move(field)) {}

  const std::string& frame_id() const noexcept { return frame_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string compose(const std::string& frame_id, const std::string& field,
                             const std::string& what) {
    std::string msg;
    if (!frame_id.empty()) msg += "frame '" + frame_id + "': ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::string frame_id_;
  std::string field_;
};

class IoError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class SchemaError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class InvariantError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class KindMismatch : public Error {
 public:
  using Error::Error;
};

class UnsupportedKind : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidTrajectory : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

class InvalidProbability : public Error {
 public:
  using Error::Error;
};

class NotEnoughFrames : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Predictor-side failures. Timeout, ProtocolError and PredictorCrashed are
// recorded per frame; PredictorLaunchError aborts a run.
class PredictorError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

class ProtocolError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

class PredictorCrashed : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

class PredictorLaunchError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

}  // namespace drivebench
