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

// Small synthetic scenarios for smoke runs and tests. The ego drives straight
// along +x at a constant speed, and the future ground truth continues that
// motion exactly, so the constant-velocity baseline scores zero L2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "drivebench/rng.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

struct SyntheticOptions {
  int cameras = 2;
  int camera_width = 48;
  int camera_height = 32;
  int lidar_points = 2000;
  int radar_points = 12;
  int history_samples = 4;
  /// Puts an obstacle on the ego path at x = 2 m for every future step.
  bool obstacle_on_path = false;
  std::string id_prefix = "synth_";
};

namespace detail {

// Rounds to the nearest float. Kept out of line: GCC 11 at -O3 (SLP
// vectorizer) drops an inline double->float->double round trip.
[[gnu::noinline]] inline double f32(double v) { return static_cast<float>(v); }

inline OccupancyGrid synthetic_grid(bool on_path) {
  // 40 m x 40 m around the ego at 0.5 m resolution.
  OccupancyGrid g(0.5, -20.0, -20.0, 80, 80);
  for (int row = 0; row < g.height; ++row)
    for (int col = 0; col < g.width; ++col) {
      const double x = g.center_x(col), y = g.center_y(row);
      if (x >= 5.0 && x <= 15.0 && y >= 4.5 && y <= 6.0) g.set(col, row);  // parked car lane
      if (on_path && std::abs(x - 2.0) <= 0.5 && std::abs(y) <= 0.5) g.set(col, row);
    }
  return g;
}

}  // namespace detail

inline Frame make_synthetic_frame(std::size_t index, std::uint64_t seed, int horizon_steps = kDefaultHorizonSteps,
                                  double dt = kDefaultDt, const SyntheticOptions& opt = {}) {
  const CounterRng rng = CounterRng(seed).derive("synthetic").derive(index);
  Frame f;
  char id[64];
  std::snprintf(id, sizeof(id), "%s%04zu", opt.id_prefix.c_str(), index);
  f.frame_id = id;

  const double v = 1.0 + static_cast<double>(index % 3);
  for (int i = opt.history_samples - 1; i >= 0; --i) {
    const double t = -dt * i;
    f.ego_history.push_back({t, v * t, 0.0, 0.0, v});
  }
  f.gt_future.dt = dt;
  for (int k = 1; k <= horizon_steps; ++k) f.gt_future.waypoints.push_back({v * k * dt, 0.0});
  f.occupancy.assign(static_cast<std::size_t>(horizon_steps), detail::synthetic_grid(opt.obstacle_on_path));

  const CounterRng cam_rng = rng.derive("camera");
  for (int c = 0; c < opt.cameras; ++c) {
    RasterImage img(opt.camera_width, opt.camera_height);
    const CounterRng r = cam_rng.derive(static_cast<std::uint64_t>(c));
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double sky = y < img.height / 2 ? 150.0 : 70.0;
        const auto n = static_cast<std::uint64_t>(y) * img.width + x;
        for (int ch = 0; ch < 3; ++ch) {
          const double val = sky + 20.0 * ch + 60.0 * r.uniform(n, static_cast<std::uint32_t>(ch));
          img.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(std::min(255.0, val)));
        }
      }
    f.cameras.push_back(std::move(img));
  }

  // LiDAR: a ground ring plus a box-shaped object; float-representable values.
  const CounterRng lr = rng.derive("lidar");
  for (int i = 0; i < opt.lidar_points; ++i) {
    const auto n = static_cast<std::uint64_t>(i);
    LidarPoint p;
    if (i % 4 == 0) {
      p.x = detail::f32(10.0 + 2.0 * lr.uniform(n, 0));
      p.y = detail::f32(5.0 + 1.5 * lr.uniform(n, 1));
      p.z = detail::f32(-1.0 + 2.0 * lr.uniform(n, 2));
    } else {
      const double ang = 2.0 * 3.14159265358979323846 * lr.uniform(n, 0);
      const double r = 3.0 + 45.0 * lr.uniform(n, 1);
      p.x = detail::f32(r * std::cos(ang));
      p.y = detail::f32(r * std::sin(ang));
      p.z = detail::f32(-1.8 + 0.1 * lr.uniform(n, 2));
    }
    p.intensity = detail::f32(lr.uniform(n, 3));
    f.lidar.points.push_back(p);
  }

  const CounterRng rr = rng.derive("radar");
  for (int i = 0; i < opt.radar_points; ++i) {
    const auto n = static_cast<std::uint64_t>(i);
    f.radar.points.push_back({detail::f32(-30.0 + 60.0 * rr.uniform(n, 0)),
                              detail::f32(-30.0 + 60.0 * rr.uniform(n, 1)),
                              detail::f32(-5.0 + 10.0 * rr.uniform(n, 2)),
                              detail::f32(-2.0 + 4.0 * rr.uniform(n, 3))});
  }
  return f;
}

inline Scenario make_synthetic_scenario(std::size_t frames, std::uint64_t seed, const SyntheticOptions& opt = {}) {
  Scenario s;
  for (std::size_t i = 0; i < frames; ++i)
    s.frames.push_back(make_synthetic_frame(i, seed, s.horizon_steps, s.dt_s, opt));
  return s;
}

}  // namespace drivebench
