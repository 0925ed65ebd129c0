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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "drivebench/bev.hpp"
#include "drivebench/rng.hpp"
#include "drivebench/synthetic.hpp"

namespace db = drivebench;

namespace {

using Hit = std::tuple<int, int, int>;  // col, row, channel

std::set<Hit> nonzero(const db::RasterImage& img) {
  std::set<Hit> out;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        if (img.at(x, y, c)) out.insert({x, y, c});
  return out;
}

db::PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  const db::CounterRng r(seed);
  db::PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.points.push_back({-60 + 120 * r.uniform(i, 0), -60 + 120 * r.uniform(i, 1), -3 + 8 * r.uniform(i, 2), 0.5});
  return c;
}

}  // namespace

TEST(FilterGround, Examples) {
  db::PointCloud low;
  for (int i = 0; i < 5; ++i) low.points.push_back({double(i), 0, -2.0, 0});
  EXPECT_TRUE(db::filter_ground(low, -1.5).points.empty());
  const auto cloud = random_cloud(1000, 1);
  EXPECT_EQ(db::filter_ground(cloud, -std::numeric_limits<double>::infinity()), cloud);
  const auto kept = db::filter_ground(cloud, 0.3);
  std::size_t expected = 0;
  for (const auto& p : cloud.points) expected += p.z > 0.3;
  EXPECT_EQ(kept.points.size(), expected);
  for (const auto& p : kept.points) EXPECT_GT(p.z, 0.3);
}

TEST(LidarBev, SinglePointAtCentreOnChannelOne) {
  const db::BevGridSpec grid;
  db::PointCloud c;
  c.points.push_back({0, 0, 1.0, 1});  // bin [0, 2) is channel 1
  const auto img = db::render_lidar_bev(c, grid);
  EXPECT_EQ(img.width, 512);
  EXPECT_EQ(img.height, 512);
  EXPECT_EQ(nonzero(img), (std::set<Hit>{{256, 256, 1}}));
  EXPECT_EQ(img.at(256, 256, 1), 255);
}

TEST(LidarBev, PointPastRangeIsSkipped) {
  const db::BevGridSpec grid;
  db::PointCloud c;
  c.points.push_back({grid.range + 1e-9, 0, 1.0, 1});
  c.points.push_back({0, 0, 10.0, 1});  // above the top bin
  EXPECT_TRUE(nonzero(db::render_lidar_bev(c, grid)).empty());
}

TEST(LidarBev, MatchesBruteForceRasterizer) {
  const db::BevGridSpec grid;
  const auto cloud = random_cloud(10000, 2);
  std::set<Hit> oracle;
  const int n = static_cast<int>(std::lround(2 * grid.range / grid.resolution));
  for (const auto& p : cloud.points) {
    const double u = (p.x + grid.range) / grid.resolution, v = (p.y + grid.range) / grid.resolution;
    if (u < 0 || v < 0 || u >= n || v >= n) continue;
    int ch;
    if (p.z < -2.0 || p.z >= 4.0) continue;
    else if (p.z < 0.0) ch = 0;
    else if (p.z < 2.0) ch = 1;
    else ch = 2;
    oracle.insert({static_cast<int>(u), static_cast<int>(v), ch});
  }
  EXPECT_EQ(nonzero(db::render_lidar_bev(cloud, grid)), oracle);
}

TEST(LidarBev, TranslationConsistent) {
  db::BevGridSpec grid;
  grid.range = 16.0;
  grid.resolution = 0.25;
  const db::CounterRng r(4);
  db::PointCloud c;
  for (std::uint64_t i = 0; i < 300; ++i)
    c.points.push_back({-8 + 16 * r.uniform(i, 0), -8 + 16 * r.uniform(i, 1), -1.0 + 4 * r.uniform(i, 2), 1});
  const int k = 3;
  db::PointCloud shifted = c;
  for (auto& p : shifted.points) p.x += k * grid.resolution, p.y -= k * grid.resolution;
  std::set<Hit> expected;
  for (auto [x, y, ch] : nonzero(db::render_lidar_bev(c, grid))) expected.insert({x + k, y - k, ch});
  EXPECT_EQ(nonzero(db::render_lidar_bev(shifted, grid)), expected);
}

TEST(RadarBev, UnitVelocityDrawsTenPixelRun) {
  db::BevGridSpec grid;
  grid.resolution = 0.1;
  grid.range = 5.0;
  db::RadarCloud r;
  r.points.push_back({0, 0, 1, 0});
  const auto img = db::render_radar_bev(r, grid, 1.0);
  const int c = grid.half();
  std::set<Hit> expected = {{c, c, 0}, {c + 10, c, 0}};
  for (int i = 1; i < 10; ++i) expected.insert({c + i, c, 1});
  EXPECT_EQ(nonzero(img), expected);
}

TEST(RadarBev, ZeroVelocityIsSingleEndpoint) {
  const db::BevGridSpec grid;
  db::RadarCloud r;
  r.points.push_back({3.3, -7.1, 0, 0});
  const auto hits = nonzero(db::render_radar_bev(r, grid));
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(std::get<2>(*hits.begin()), 0);
}

TEST(RadarBev, DuplicatePointsIdempotent) {
  const db::BevGridSpec grid;
  db::RadarCloud one, two;
  one.points.push_back({1.0, 2.0, -3.0, 4.5});
  two.points = {one.points[0], one.points[0]};
  EXPECT_EQ(db::render_radar_bev(one, grid), db::render_radar_bev(two, grid));
}

TEST(RadarBev, LinesAreConnectedAndFollowIdealSegment) {
  db::BevGridSpec grid;
  grid.range = 20;
  grid.resolution = 0.25;
  const db::CounterRng rng(8);
  for (std::uint64_t i = 0; i < 200; ++i) {
    db::RadarCloud r;
    r.points.push_back({-5 + 10 * rng.uniform(i, 0), -5 + 10 * rng.uniform(i, 1), -6 + 12 * rng.uniform(i, 2),
                        -6 + 12 * rng.uniform(i, 3)});
    const auto hits = nonzero(db::render_radar_bev(r, grid, 1.0));
    const auto [c0, r0] = grid.raw_cell(r.points[0].x, r.points[0].y);
    const auto [c1, r1] = grid.raw_cell(r.points[0].x + r.points[0].vx, r.points[0].y + r.points[0].vy);
    const long long dx = c1 - c0, dy = r1 - r0;
    const long long major = std::max(std::llabs(dx), std::llabs(dy));
    // One pixel per step along the major axis, each within half a pixel of the ideal line.
    EXPECT_EQ(static_cast<long long>(hits.size()), major + 1) << i;
    for (auto [x, y, ch] : hits) {
      const double cross = std::abs(static_cast<double>(dx * (y - r0) - dy * (x - c0)));
      EXPECT_LE(cross, 0.5 * static_cast<double>(major) + 1e-9) << i;
      const bool end = (x == c0 && y == r0) || (x == c1 && y == r1);
      EXPECT_EQ(ch, end ? 0 : 1);
    }
  }
}

TEST(Fusion, ComposesRendersInOrder) {
  const auto frame = db::make_synthetic_frame(1, 5);
  db::PromptBundle prompts{"L", "R", "C", "user", {}};
  const db::BevGridSpec grid;
  const auto fused = db::assemble_fusion_input(frame, prompts, grid, -1.5, 1.0);
  EXPECT_EQ(fused.lidar_bev, db::render_lidar_bev(db::filter_ground(frame.lidar, -1.5), grid));
  EXPECT_EQ(fused.radar_bev, db::render_radar_bev(frame.radar, grid, 1.0));
  EXPECT_EQ(fused.cameras, frame.cameras);
  const auto seg = fused.segments();
  EXPECT_EQ(seg[0].name, "lidar");
  EXPECT_EQ(*seg[0].system_prompt, "L");
  EXPECT_EQ(seg[1].name, "radar");
  EXPECT_EQ(*seg[1].system_prompt, "R");
  EXPECT_EQ(seg[2].name, "camera");
  EXPECT_EQ(seg[2].rasters.size(), frame.cameras.size());
}

TEST(Fusion, EmptyCloudsGiveBlankRasters) {
  db::Frame f;
  db::PromptBundle prompts{"L", "R", "C", "user", {{"user", "hi"}}};
  const auto fused = db::assemble_fusion_input(f, prompts);
  EXPECT_TRUE(nonzero(fused.lidar_bev).empty());
  EXPECT_TRUE(nonzero(fused.radar_bev).empty());
  EXPECT_EQ(fused.prompts, prompts);
}

TEST(BevGrid, ValidationRejectsBadSpecs) {
  db::BevGridSpec g;
  g.resolution = 0;
  EXPECT_THROW(g.validate(), db::InvalidInput);
  g = {};
  g.height_bins = {0, 0};
  EXPECT_THROW(g.validate(), db::InvalidInput);
  EXPECT_THROW(db::render_radar_bev({}, db::BevGridSpec{}, 0.0), db::InvalidInput);
}
