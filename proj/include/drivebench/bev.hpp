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

// Bird's-eye-view rasterization of LiDAR and radar, and assembly of the fused
// (lidar, radar, camera) model input with its per-group system prompts.
//
// Pixel (col, row) = (floor(x / res) + half, floor(y / res) + half) where
// half = range / res, so the ego origin lands on pixel (half, half).

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

inline constexpr double kDefaultGroundCut = -1.5;
inline constexpr double kDefaultRadarTau = 1.0;

struct BevGridSpec {
  double range = 51.2;       // +/- metres in x and y
  double resolution = 0.2;   // metres per pixel
  std::vector<double> height_bins{-2.0, 0.0, 2.0, 4.0};  // z boundaries

  int half() const { return static_cast<int>(std::lround(range / resolution)); }
  int pixels() const { return 2 * half(); }

  void validate() const {
    if (!(resolution > 0) || !std::isfinite(resolution)) throw InvalidInput("BEV resolution must be positive");
    if (!(range > 0) || !std::isfinite(range)) throw InvalidInput("BEV range must be positive");
    if (height_bins.size() < 2) throw InvalidInput("BEV height bins need at least two boundaries");
    for (std::size_t i = 1; i < height_bins.size(); ++i)
      if (!(height_bins[i] > height_bins[i - 1])) throw InvalidInput("BEV height bins must be strictly increasing");
  }

  /// Unclipped pixel coordinate of a metric position.
  std::pair<long long, long long> raw_cell(double x, double y) const {
    return {static_cast<long long>(std::floor(x / resolution)) + half(),
            static_cast<long long>(std::floor(y / resolution)) + half()};
  }

  bool inside(long long col, long long row) const {
    const long long n = pixels();
    return col >= 0 && row >= 0 && col < n && row < n;
  }

  /// Height channel for z, or nullopt outside the bins. Clamped to 3 channels.
  std::optional<int> height_channel(double z) const {
    if (!(z >= height_bins.front()) || !(z < height_bins.back())) return std::nullopt;
    int bin = 0;
    while (!(z < height_bins[static_cast<std::size_t>(bin) + 1])) ++bin;
    return bin < 2 ? bin : 2;
  }

  bool operator==(const BevGridSpec&) const = default;
};

/// Keeps points with z > z_cut, preserving order.
inline PointCloud filter_ground(const PointCloud& cloud, double z_cut = kDefaultGroundCut) {
  PointCloud out;
  for (const auto& p : cloud.points)
    if (p.z > z_cut) out.points.push_back(p);
  return out;
}

/// 255 on the height channel of every pixel hit; points outside the grid or
/// the height bins are skipped.
inline RasterImage render_lidar_bev(const PointCloud& cloud, const BevGridSpec& grid) {
  grid.validate();
  const int n = grid.pixels();
  RasterImage img(n, n);
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    const auto channel = grid.height_channel(p.z);
    if (!channel) continue;
    const auto [col, row] = grid.raw_cell(p.x, p.y);
    if (!grid.inside(col, row)) continue;
    img.at(static_cast<int>(col), static_cast<int>(row), *channel) = 255;
  }
  return img;
}

namespace detail {

/// Integer Bresenham over all octants; visits both endpoints.
template <typename Visit>
void bresenham(long long x0, long long y0, long long x1, long long y1, Visit&& visit) {
  const long long dx = std::llabs(x1 - x0), dy = -std::llabs(y1 - y0);
  const long long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long long err = dx + dy;
  while (true) {
    visit(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const long long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace detail

/// Each radar point becomes a segment from (x, y) to (x + vx tau, y + vy tau):
/// endpoints on channel 0, interior pixels on channel 1.
inline RasterImage render_radar_bev(const RadarCloud& radar, const BevGridSpec& grid, double tau = kDefaultRadarTau) {
  grid.validate();
  if (!(tau > 0)) throw InvalidInput("radar tau must be positive");
  const int n = grid.pixels();
  RasterImage img(n, n);
  // Segments longer than this cannot touch the grid from both ends anyway.
  const long long max_len = 4LL * n;
  for (const auto& p : radar.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.vx) || !std::isfinite(p.vy)) continue;
    const auto [c0, r0] = grid.raw_cell(p.x, p.y);
    const auto [c1, r1] = grid.raw_cell(p.x + p.vx * tau, p.y + p.vy * tau);
    if (std::llabs(c1 - c0) > max_len || std::llabs(r1 - r0) > max_len) continue;
    detail::bresenham(c0, r0, c1, r1, [&](long long c, long long r) {
      if (!grid.inside(c, r)) return;
      const bool endpoint = (c == c0 && r == r0) || (c == c1 && r == r1);
      img.at(static_cast<int>(c), static_cast<int>(r), endpoint ? 0 : 1) = 255;
    });
  }
  return img;
}

/// One (rasters, system prompt) group of the fused input.
struct FusionSegment {
  std::string_view name;
  std::span<const RasterImage> rasters;
  const std::string* system_prompt;
};

struct FusionInput {
  RasterImage lidar_bev;
  RasterImage radar_bev;
  std::vector<RasterImage> cameras;
  PromptBundle prompts;

  /// Concatenation order: (lidar, S_L), (radar, S_R), (cameras, S_C).
  std::array<FusionSegment, 3> segments() const {
    return {FusionSegment{"lidar", std::span<const RasterImage>(&lidar_bev, 1), &prompts.system_lidar},
            FusionSegment{"radar", std::span<const RasterImage>(&radar_bev, 1), &prompts.system_radar},
            FusionSegment{"camera", std::span<const RasterImage>(cameras), &prompts.system_camera}};
  }
};

inline FusionInput assemble_fusion_input(const Frame& frame, const PromptBundle& prompts,
                                         const BevGridSpec& grid = {}, double z_cut = kDefaultGroundCut,
                                         double tau = kDefaultRadarTau) {
  return {render_lidar_bev(filter_ground(frame.lidar, z_cut), grid), render_radar_bev(frame.radar, grid, tau),
          frame.cameras, prompts};
}

}  // namespace drivebench
