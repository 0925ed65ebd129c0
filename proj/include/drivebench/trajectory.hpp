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

// Trajectory text codec, speed/curvature integration and the
// constant-velocity baseline.
//
// Wire grammar (first '[' in the text starts the list; prose around it is
// ignored):
//   list  := '[' ws ( pair ( ws ',' ws pair )* )? ws ']'
//   pair  := '(' ws number ws ',' ws number ws ')'

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

namespace detail {

/// Cursor over predictor text. `eof` distinguishes truncation from garbage.
class TextCursor {
 public:
  explicit TextCursor(std::string_view s, std::size_t pos = 0) : s_(s), pos_(pos) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  void advance() { ++pos_; }
  std::size_t pos() const { return pos_; }

  /// Parses a decimal/scientific number, accepting a leading '+', nan and inf.
  /// Returns nullopt on garbage; sets `truncated` if the text ends mid-token.
  std::optional<double> number(bool& truncated) {
    truncated = false;
    if (eof()) {
      truncated = true;
      return std::nullopt;
    }
    std::size_t start = pos_;
    if (s_[start] == '+') ++start;
    if (start >= s_.size()) {
      truncated = true;
      return std::nullopt;
    }
    double v = 0;
    const char* first = s_.data() + start;
    const char* last = s_.data() + s_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc::invalid_argument) {
      // A lone sign at the very end is truncation, anything else is garbage.
      if (s_[start] == '-' && start + 1 == s_.size()) truncated = true;
      return std::nullopt;
    }
    if (ec == std::errc::result_out_of_range) v = std::strtod(std::string(first, ptr).c_str(), nullptr);
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }

 private:
  std::string_view s_;
  std::size_t pos_;
};

}  // namespace detail

/// Parses the first bracketed coordinate list. Invalid outputs are values.
inline Trajectory parse_trajectory(std::string_view text, int horizon_steps = kDefaultHorizonSteps,
                                   double dt = kDefaultDt) {
  const std::size_t open = text.find('[');
  if (open == std::string_view::npos) return Trajectory::make_invalid(InvalidReason::NoList, dt);

  detail::TextCursor cur(text, open + 1);
  std::vector<Waypoint> pts;
  auto fail = [&](bool truncated) {
    return Trajectory::make_invalid(truncated ? InvalidReason::Truncated : InvalidReason::NoList, dt);
  };
  auto expect = [&](char c) -> std::optional<bool> {  // nullopt ok, else truncated flag
    cur.skip_ws();
    if (cur.eof()) return true;
    if (cur.peek() != c) return false;
    cur.advance();
    return std::nullopt;
  };

  cur.skip_ws();
  if (cur.eof()) return fail(true);
  if (cur.peek() != ']') {
    while (true) {
      if (auto r = expect('(')) return fail(*r);
      double xy[2];
      for (int k = 0; k < 2; ++k) {
        cur.skip_ws();
        bool truncated = false;
        auto v = cur.number(truncated);
        if (!v) return fail(truncated);
        xy[k] = *v;
        if (k == 0)
          if (auto r = expect(',')) return fail(*r);
      }
      if (auto r = expect(')')) return fail(*r);
      pts.push_back({xy[0], xy[1]});
      cur.skip_ws();
      if (cur.eof()) return fail(true);
      if (cur.peek() == ']') break;
      if (cur.peek() != ',') return fail(false);
      cur.advance();
    }
  }

  for (const auto& p : pts)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return Trajectory::make_invalid(InvalidReason::NonFinite, dt);
  for (const auto& p : pts)
    if (std::abs(p.x) > kMaxCoordinate || std::abs(p.y) > kMaxCoordinate)
      return Trajectory::make_invalid(InvalidReason::OutOfRange, dt);
  if (static_cast<int>(pts.size()) != horizon_steps) return Trajectory::make_invalid(InvalidReason::WrongCount, dt);

  Trajectory t;
  t.waypoints = std::move(pts);
  t.dt = dt;
  return t;
}

/// Canonical form: "[(x, y), (x, y), ...]" with two decimals.
inline std::string format_trajectory(const Trajectory& traj) {
  if (!traj.valid()) throw InvalidInput("cannot format an invalid trajectory");
  std::string out = "[";
  char buf[96];
  for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s(%.2f, %.2f)", i ? ", " : "", traj.waypoints[i].x, traj.waypoints[i].y);
    out += buf;
  }
  out += "]";
  return out;
}

// ---------------------------------------------------------------------------

struct SpeedCurvatureProfile {
  std::vector<double> speeds;      // m/s
  std::vector<double> curvatures;  // 1/m
  double theta0 = 0;               // rad
  double x0 = 0, y0 = 0;           // m
  double dt = kDefaultDt;          // s
};

/// Dead reckoning exactly as the summations are written:
///   theta_t = theta_0 + sum_{i<=t} k_i s_i dt
///   X_t = X_0 + sum_{i<=t} s_i cos(theta_i) dt   (likewise Y with sin)
/// These are right-endpoint Riemann sums, not the trapezoidal rule their
/// source calls them; the written form is kept.
inline Trajectory integrate_speed_curvature(const SpeedCurvatureProfile& p) {
  if (p.speeds.empty() || p.speeds.size() != p.curvatures.size())
    throw InvalidInput("speeds and curvatures must be non-empty and of equal length");
  if (!(p.dt > 0)) throw InvalidInput("dt must be positive");
  Trajectory t;
  t.dt = p.dt;
  double theta = p.theta0, x = p.x0, y = p.y0;
  for (std::size_t i = 0; i < p.speeds.size(); ++i) {
    theta += p.curvatures[i] * p.speeds[i] * p.dt;
    x += p.speeds[i] * std::cos(theta) * p.dt;
    y += p.speeds[i] * std::sin(theta) * p.dt;
    t.waypoints.push_back({x, y});
  }
  return t;
}

/// Extrapolates the last observed velocity, expressed in the ego frame of the
/// newest history sample (x forward along its heading).
inline Trajectory constant_velocity_baseline(const std::vector<EgoState>& history,
                                             int horizon_steps = kDefaultHorizonSteps, double dt = kDefaultDt) {
  if (history.size() < 2) throw InsufficientHistory("constant-velocity baseline needs at least two history samples");
  const EgoState& a = history[history.size() - 2];
  const EgoState& b = history.back();
  const double span = b.t - a.t;
  if (!(span > 0)) throw InsufficientHistory("last two history samples are not time-ordered");
  const double vx = (b.x - a.x) / span, vy = (b.y - a.y) / span;
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  const double ex = c * vx + s * vy, ey = -s * vx + c * vy;
  Trajectory t;
  t.dt = dt;
  for (int k = 1; k <= horizon_steps; ++k) t.waypoints.push_back({ex * k * dt, ey * k * dt});
  return t;
}

// ---------------------------------------------------------------------------
// Speed/curvature answers ("speeds: [..] curvatures: [..]")

struct SpeedCurvatureAnswer {
  std::vector<double> speeds;
  std::vector<double> curvatures;
};

namespace detail {

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Parses the bracketed number list following `key`.
inline std::variant<std::vector<double>, InvalidReason> number_list_after(std::string_view text,
                                                                          std::string_view key) {
  const std::string lower = lowercase(text);
  const std::size_t at = lower.find(key);
  if (at == std::string::npos) return InvalidReason::NoList;
  const std::size_t open = text.find('[', at);
  if (open == std::string_view::npos) return InvalidReason::NoList;
  TextCursor cur(text, open + 1);
  std::vector<double> out;
  cur.skip_ws();
  if (cur.eof()) return InvalidReason::Truncated;
  if (cur.peek() == ']') return out;
  while (true) {
    cur.skip_ws();
    bool truncated = false;
    auto v = cur.number(truncated);
    if (!v) return truncated ? InvalidReason::Truncated : InvalidReason::NoList;
    if (!std::isfinite(*v)) return InvalidReason::NonFinite;
    out.push_back(*v);
    cur.skip_ws();
    if (cur.eof()) return InvalidReason::Truncated;
    if (cur.peek() == ']') return out;
    if (cur.peek() != ',') return InvalidReason::NoList;
    cur.advance();
  }
}

}  // namespace detail

/// Extracts "speed ... [s1, ...]" and "curvature ... [k1, ...]" lists; both
/// must have `steps` entries.
inline std::variant<SpeedCurvatureAnswer, InvalidReason> parse_speed_curvature(std::string_view text, int steps) {
  auto speeds = detail::number_list_after(text, "speed");
  if (auto* r = std::get_if<InvalidReason>(&speeds)) return *r;
  auto curvs = detail::number_list_after(text, "curvature");
  if (auto* r = std::get_if<InvalidReason>(&curvs)) return *r;
  SpeedCurvatureAnswer a{std::get<0>(std::move(speeds)), std::get<0>(std::move(curvs))};
  if (static_cast<int>(a.speeds.size()) != steps || static_cast<int>(a.curvatures.size()) != steps)
    return InvalidReason::WrongCount;
  return a;
}

inline std::string format_speed_curvature(const std::vector<double>& speeds, const std::vector<double>& curvatures) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    char buf[48];
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.6g", i ? ", " : "", v[i]);
      s += buf;
    }
    return s + "]";
  };
  return "speeds: " + list(speeds) + "\ncurvatures: " + list(curvatures);
}

}  // namespace drivebench
