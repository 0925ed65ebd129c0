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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivebench/errors.hpp"

namespace drivebench {

inline constexpr int kDefaultHorizonSteps = 6;
inline constexpr double kDefaultDt = 0.5;
/// Waypoints further than this from the ego origin are treated as garbage.
inline constexpr double kMaxCoordinate = 200.0;

// ---------------------------------------------------------------------------
// Sensor data

/// 8-bit interleaved RGB raster, row-major.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  static constexpr int kChannels = 3;

  RasterImage() = default;
  RasterImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * kChannels, 0) {}

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * kChannels + c;
  }
  std::uint8_t at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) noexcept { return data[index(x, y, c)]; }

  bool valid() const noexcept {
    return width >= 1 && height >= 1 &&
           data.size() == static_cast<std::size_t>(width) * height * kChannels;
  }

  bool operator==(const RasterImage&) const = default;
};

struct LidarPoint {
  double x = 0, y = 0, z = 0;
  double intensity = 0;
  bool operator==(const LidarPoint&) const = default;
};

struct PointCloud {
  std::vector<LidarPoint> points;
  bool operator==(const PointCloud&) const = default;
};

struct RadarPoint {
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  bool operator==(const RadarPoint&) const = default;
};

struct RadarCloud {
  std::vector<RadarPoint> points;
  bool operator==(const RadarCloud&) const = default;
};

/// Per-timestep obstacle raster. Cell (col, row) covers
/// [origin_x + col*res, origin_x + (col+1)*res) x [origin_y + row*res, ...).
struct OccupancyGrid {
  double resolution = 0.5;
  double origin_x = 0;
  double origin_y = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;  // one entry per cell, 0 or 1

  OccupancyGrid() = default;
  OccupancyGrid(double res, double ox, double oy, int w, int h)
      : resolution(res), origin_x(ox), origin_y(oy), width(w), height(h),
        cells(static_cast<std::size_t>(w) * h, 0) {}

  bool occupied(int col, int row) const noexcept {
    return cells[static_cast<std::size_t>(row) * width + col] != 0;
  }
  void set(int col, int row, bool v = true) noexcept {
    cells[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0;
  }
  double center_x(int col) const noexcept { return origin_x + (col + 0.5) * resolution; }
  double center_y(int row) const noexcept { return origin_y + (row + 0.5) * resolution; }

  bool operator==(const OccupancyGrid&) const = default;
};

// ---------------------------------------------------------------------------
// Trajectories

enum class InvalidReason {
  NoList,
  WrongCount,
  NonFinite,
  OutOfRange,
  Truncated,
  Timeout,
  ProtocolError,
  PredictorCrashed,
};

inline constexpr std::array kAllInvalidReasons = {
    InvalidReason::NoList,     InvalidReason::WrongCount, InvalidReason::NonFinite,
    InvalidReason::OutOfRange, InvalidReason::Truncated,  InvalidReason::Timeout,
    InvalidReason::ProtocolError, InvalidReason::PredictorCrashed,
};

constexpr std::string_view to_string(InvalidReason r) noexcept {
  switch (r) {
    case InvalidReason::NoList: return "NoList";
    case InvalidReason::WrongCount: return "WrongCount";
    case InvalidReason::NonFinite: return "NonFinite";
    case InvalidReason::OutOfRange: return "OutOfRange";
    case InvalidReason::Truncated: return "Truncated";
    case InvalidReason::Timeout: return "Timeout";
    case InvalidReason::ProtocolError: return "ProtocolError";
    case InvalidReason::PredictorCrashed: return "PredictorCrashed";
  }
  return "?";
}

inline std::optional<InvalidReason> parse_invalid_reason(std::string_view s) {
  for (auto r : kAllInvalidReasons)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct Waypoint {
  double x = 0;
  double y = 0;
  bool operator==(const Waypoint&) const = default;
};

/// Future ego positions in the ego frame at prediction time, spaced dt apart.
/// An invalid trajectory carries a reason and no waypoints.
struct Trajectory {
  std::vector<Waypoint> waypoints;
  double dt = kDefaultDt;
  std::optional<InvalidReason> invalid;

  bool valid() const noexcept { return !invalid.has_value(); }

  static Trajectory make_invalid(InvalidReason reason, double dt = kDefaultDt) {
    Trajectory t;
    t.dt = dt;
    t.invalid = reason;
    return t;
  }

  bool operator==(const Trajectory&) const = default;
};

// ---------------------------------------------------------------------------
// Scenario

struct EgoState {
  double t = 0;
  double x = 0;
  double y = 0;
  double heading = 0;
  double speed = 0;
  bool operator==(const EgoState&) const = default;
};

struct Frame {
  std::string frame_id;
  std::vector<RasterImage> cameras;
  PointCloud lidar;
  RadarCloud radar;
  std::vector<EgoState> ego_history;
  Trajectory gt_future;
  std::vector<OccupancyGrid> occupancy;  // one per future step

  bool operator==(const Frame&) const = default;
};

struct Scenario {
  int version = 1;
  double dt_s = kDefaultDt;
  int horizon_steps = kDefaultHorizonSteps;
  std::vector<Frame> frames;

  bool operator==(const Scenario&) const = default;
};

// ---------------------------------------------------------------------------
// Prompts

struct ChatTurn {
  std::string role;
  std::string text;
  bool operator==(const ChatTurn&) const = default;
};

/// System prompts per modality group, the user prompt, and prior turns.
struct PromptBundle {
  std::string system_lidar;
  std::string system_radar;
  std::string system_camera;
  std::string user_prompt;
  std::vector<ChatTurn> history;

  bool operator==(const PromptBundle&) const = default;
};

// ---------------------------------------------------------------------------
// Corruptions

enum class Severity { Easy, Mid, Hard };

inline constexpr std::array kAllSeverities = {Severity::Easy, Severity::Mid, Severity::Hard};

constexpr int severity_index(Severity s) noexcept { return static_cast<int>(s); }

constexpr std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Easy: return "easy";
    case Severity::Mid: return "mid";
    case Severity::Hard: return "hard";
  }
  return "?";
}

inline std::optional<Severity> parse_severity(std::string_view s) {
  for (auto v : kAllSeverities)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

enum class CorruptionTarget { Image, PointCloud, Prompt };

constexpr std::string_view to_string(CorruptionTarget t) noexcept {
  switch (t) {
    case CorruptionTarget::Image: return "image";
    case CorruptionTarget::PointCloud: return "pointcloud";
    case CorruptionTarget::Prompt: return "prompt";
  }
  return "?";
}

enum class CorruptionKind {
  // sensor
  Dark,
  Brightness,
  Snow,
  Fog,
  Rain,
  Motion,
  // prompt
  CharPerturb,
  WordDelete,
  CommandOverride,
  DialogueInjection,
  MaliciousInjection,
};

/// Report order: sensor kinds as tabulated, then prompt kinds.
inline constexpr std::array kAllCorruptionKinds = {
    CorruptionKind::Dark,        CorruptionKind::Brightness,      CorruptionKind::Snow,
    CorruptionKind::Fog,         CorruptionKind::Rain,            CorruptionKind::Motion,
    CorruptionKind::CharPerturb, CorruptionKind::WordDelete,      CorruptionKind::CommandOverride,
    CorruptionKind::DialogueInjection, CorruptionKind::MaliciousInjection,
};

constexpr std::string_view to_string(CorruptionKind k) noexcept {
  switch (k) {
    case CorruptionKind::Dark: return "dark";
    case CorruptionKind::Brightness: return "brightness";
    case CorruptionKind::Snow: return "snow";
    case CorruptionKind::Fog: return "fog";
    case CorruptionKind::Rain: return "rain";
    case CorruptionKind::Motion: return "motion";
    case CorruptionKind::CharPerturb: return "char_perturb";
    case CorruptionKind::WordDelete: return "word_delete";
    case CorruptionKind::CommandOverride: return "command_override";
    case CorruptionKind::DialogueInjection: return "dialogue_injection";
    case CorruptionKind::MaliciousInjection: return "malicious_injection";
  }
  return "?";
}

inline std::optional<CorruptionKind> parse_corruption_kind(std::string_view s) {
  for (auto k : kAllCorruptionKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

constexpr bool is_sensor_kind(CorruptionKind k) noexcept {
  return static_cast<int>(k) <= static_cast<int>(CorruptionKind::Motion);
}

/// Whether a kind is parameterized by Easy/Mid/Hard.
constexpr bool has_severity(CorruptionKind k) noexcept {
  return is_sensor_kind(k) || k == CorruptionKind::CharPerturb || k == CorruptionKind::WordDelete;
}

struct CorruptionSpec {
  CorruptionTarget target = CorruptionTarget::Image;
  CorruptionKind kind = CorruptionKind::Dark;
  std::optional<Severity> severity;
  std::uint64_t seed = 0;

  /// Throws KindMismatch when the kind does not belong to the target or the
  /// severity presence does not match the kind.
  void validate() const {
    const bool sensor_target = target != CorruptionTarget::Prompt;
    if (sensor_target != is_sensor_kind(kind))
      throw KindMismatch(std::string("kind '") + std::string(to_string(kind)) +
                         "' is not applicable to target '" + std::string(to_string(target)) + "'");
    if (has_severity(kind) && !severity)
      throw KindMismatch(std::string("kind '") + std::string(to_string(kind)) + "' requires a severity");
    if (!has_severity(kind) && severity)
      throw KindMismatch(std::string("kind '") + std::string(to_string(kind)) + "' takes no severity");
  }

  bool operator==(const CorruptionSpec&) const = default;
};

}  // namespace drivebench
