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

// Scenario manifests: loading, saving and invariant checks.
//
// Manifest layout (JSON):
//   {version, dt_s, horizon_steps,
//    frames: [{frame_id, cameras: [png paths], lidar: path, radar: path,
//              ego_history: [[t, x, y, heading, speed], ...],
//              gt_future: [[x, y], ...],
//              occupancy: [{resolution, origin: [x, y], width, height, path}]}]}
// Relative paths resolve against the manifest's directory. Point clouds are
// little-endian float32 records, (x, y, z, intensity) for LiDAR with an
// optional trailing ring field (frame key "lidar_record_floats": 5), and
// (x, y, vx, vy) for radar. Occupancy bitsets are row-major, 8 cells per
// byte, least significant bit first.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivebench/errors.hpp"
#include "drivebench/png_io.hpp"
#include "drivebench/types.hpp"

namespace drivebench {

static_assert(std::endian::native == std::endian::little,
              "binary asset codecs assume a little-endian host");

struct Diagnostic {
  std::string frame_id;
  std::string code;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path,
                                            const std::string& frame_id,
                                            const std::string& field) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(frame_id, field, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("", path.string(), "cannot open for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("", path.string(), "write failed");
}

inline std::vector<float> as_floats(const std::vector<std::uint8_t>& bytes) {
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(float));
  return out;
}

inline std::vector<std::uint8_t> from_floats(const std::vector<float>& values) {
  std::vector<std::uint8_t> out(values.size() * sizeof(float));
  std::memcpy(out.data(), values.data(), out.size());
  return out;
}

template <typename T>
T require(const nlohmann::json& obj, const char* key, const std::string& frame_id) {
  if (!obj.is_object() || !obj.contains(key))
    throw SchemaError(frame_id, key, "missing field");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(frame_id, key, std::string("wrong type: ") + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary codecs

inline PointCloud decode_lidar(const std::vector<std::uint8_t>& bytes, int record_floats = 4,
                               const std::string& frame_id = "") {
  const std::size_t record = static_cast<std::size_t>(record_floats) * sizeof(float);
  if (record_floats != 4 && record_floats != 5)
    throw SchemaError(frame_id, "lidar_record_floats", "must be 4 or 5");
  if (bytes.size() % record != 0)
    throw SchemaError(frame_id, "lidar",
                      "byte length " + std::to_string(bytes.size()) + " is not a multiple of " +
                          std::to_string(record));
  const auto f = detail::as_floats(bytes);
  PointCloud cloud;
  cloud.points.reserve(f.size() / record_floats);
  for (std::size_t i = 0; i + record_floats <= f.size(); i += record_floats)
    cloud.points.push_back({f[i], f[i + 1], f[i + 2], f[i + 3]});
  return cloud;
}

inline std::vector<std::uint8_t> encode_lidar(const PointCloud& cloud) {
  std::vector<float> f;
  f.reserve(cloud.points.size() * 4);
  for (const auto& p : cloud.points) {
    f.push_back(static_cast<float>(p.x));
    f.push_back(static_cast<float>(p.y));
    f.push_back(static_cast<float>(p.z));
    f.push_back(static_cast<float>(p.intensity));
  }
  return detail::from_floats(f);
}

inline RadarCloud decode_radar(const std::vector<std::uint8_t>& bytes, const std::string& frame_id = "") {
  if (bytes.size() % 16 != 0)
    throw SchemaError(frame_id, "radar",
                      "byte length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  const auto f = detail::as_floats(bytes);
  RadarCloud cloud;
  cloud.points.reserve(f.size() / 4);
  for (std::size_t i = 0; i + 4 <= f.size(); i += 4) cloud.points.push_back({f[i], f[i + 1], f[i + 2], f[i + 3]});
  return cloud;
}

inline std::vector<std::uint8_t> encode_radar(const RadarCloud& cloud) {
  std::vector<float> f;
  f.reserve(cloud.points.size() * 4);
  for (const auto& p : cloud.points) {
    f.push_back(static_cast<float>(p.x));
    f.push_back(static_cast<float>(p.y));
    f.push_back(static_cast<float>(p.vx));
    f.push_back(static_cast<float>(p.vy));
  }
  return detail::from_floats(f);
}

inline std::vector<std::uint8_t> encode_occupancy_bits(const OccupancyGrid& grid) {
  std::vector<std::uint8_t> out((grid.cells.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (grid.cells[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

inline void decode_occupancy_bits(const std::vector<std::uint8_t>& bytes, OccupancyGrid& grid,
                                  const std::string& frame_id = "") {
  const std::size_t n = static_cast<std::size_t>(grid.width) * grid.height;
  if (bytes.size() != (n + 7) / 8)
    throw SchemaError(frame_id, "occupancy",
                      "expected " + std::to_string((n + 7) / 8) + " bytes for " +
                          std::to_string(grid.width) + "x" + std::to_string(grid.height) +
                          " cells, got " + std::to_string(bytes.size()));
  grid.cells.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) grid.cells[i] = (bytes[i / 8] >> (i % 8)) & 1u;
}

// ---------------------------------------------------------------------------
// Validation

/// Machine-readable invariant check. Empty result iff every invariant holds.
inline std::vector<Diagnostic> validate_frame(const Frame& f, int horizon_steps) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string code, std::string msg) {
    out.push_back({f.frame_id, std::move(code), std::move(msg)});
  };

  for (std::size_t i = 0; i < f.cameras.size(); ++i)
    if (!f.cameras[i].valid()) add("BAD_IMAGE", "camera " + std::to_string(i) + " has inconsistent size");

  for (std::size_t i = 0; i < f.lidar.points.size(); ++i) {
    const auto& p = f.lidar.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(p.intensity)) {
      add("NONFINITE_POINT", "lidar point " + std::to_string(i) + " has a non-finite value");
    } else if (p.intensity < 0.0 || p.intensity > 1.0) {
      add("INTENSITY_RANGE", "lidar point " + std::to_string(i) + " intensity outside [0,1]");
    }
  }
  for (std::size_t i = 0; i < f.radar.points.size(); ++i) {
    const auto& p = f.radar.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.vx) || !std::isfinite(p.vy))
      add("NONFINITE_RADAR", "radar point " + std::to_string(i) + " has a non-finite value");
  }

  if (f.ego_history.empty()) {
    add("EMPTY_HISTORY", "ego_history is empty");
  } else {
    for (std::size_t i = 1; i < f.ego_history.size(); ++i) {
      if (!(f.ego_history[i].t > f.ego_history[i - 1].t)) {
        add("NONMONOTONIC_HISTORY", "ego_history timestamps not strictly increasing at index " +
                                        std::to_string(i));
        break;
      }
    }
  }

  if (!f.gt_future.valid()) {
    add("INVALID_GT", "gt_future is marked invalid");
  } else {
    if (static_cast<int>(f.gt_future.waypoints.size()) != horizon_steps)
      add("HORIZON_LENGTH", "gt_future has " + std::to_string(f.gt_future.waypoints.size()) +
                                " waypoints, expected " + std::to_string(horizon_steps));
    for (const auto& w : f.gt_future.waypoints) {
      if (!std::isfinite(w.x) || !std::isfinite(w.y) || std::abs(w.x) > kMaxCoordinate ||
          std::abs(w.y) > kMaxCoordinate) {
        add("GT_OUT_OF_RANGE", "gt_future waypoint is non-finite or beyond 200 m");
        break;
      }
    }
  }
  if (f.gt_future.waypoints.size() != f.occupancy.size())
    add("OCCUPANCY_LENGTH", "gt_future has " + std::to_string(f.gt_future.waypoints.size()) +
                                " waypoints but " + std::to_string(f.occupancy.size()) +
                                " occupancy grids");
  for (std::size_t i = 0; i < f.occupancy.size(); ++i) {
    const auto& g = f.occupancy[i];
    if (!(g.resolution > 0) || g.width < 0 || g.height < 0 ||
        g.cells.size() != static_cast<std::size_t>(g.width) * g.height)
      add("BAD_OCCUPANCY", "occupancy grid " + std::to_string(i) + " is malformed");
  }
  return out;
}

inline std::vector<Diagnostic> validate_scenario(const Scenario& s) {
  std::vector<Diagnostic> out;
  for (const auto& f : s.frames) {
    auto d = validate_frame(f, s.horizon_steps);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest I/O

inline Scenario load_scenario(const std::filesystem::path& manifest_path) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  if (!fs::exists(manifest_path))
    throw IoError("", "manifest", "no such file '" + manifest_path.string() + "'");
  const auto raw = detail::read_bytes(manifest_path, "", "manifest");
  json doc = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.is_discarded()) throw SchemaError("", "manifest", "not valid JSON");
  if (!doc.is_object()) throw SchemaError("", "manifest", "top level must be an object");

  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  Scenario s;
  s.version = detail::require<int>(doc, "version", "");
  s.dt_s = detail::require<double>(doc, "dt_s", "");
  s.horizon_steps = detail::require<int>(doc, "horizon_steps", "");
  if (!(s.dt_s > 0)) throw SchemaError("", "dt_s", "must be positive");
  if (s.horizon_steps < 1) throw SchemaError("", "horizon_steps", "must be at least 1");
  const auto frames = detail::require<json>(doc, "frames", "");
  if (!frames.is_array()) throw SchemaError("", "frames", "must be an array");

  for (const auto& jf : frames) {
    Frame f;
    f.frame_id = detail::require<std::string>(jf, "frame_id", "");
    const std::string& id = f.frame_id;

    for (const auto& p : detail::require<std::vector<std::string>>(jf, "cameras", id)) {
      const auto path = resolve(p);
      if (!fs::exists(path)) throw IoError(id, "cameras", "no such file '" + path.string() + "'");
      try {
        f.cameras.push_back(png::read(path));
      } catch (const ScenarioError& e) {
        throw SchemaError(id, "cameras", e.what());
      }
    }

    const int record_floats = jf.contains("lidar_record_floats")
                                  ? detail::require<int>(jf, "lidar_record_floats", id)
                                  : 4;
    f.lidar = decode_lidar(detail::read_bytes(resolve(detail::require<std::string>(jf, "lidar", id)), id, "lidar"),
                           record_floats, id);
    f.radar = decode_radar(detail::read_bytes(resolve(detail::require<std::string>(jf, "radar", id)), id, "radar"), id);

    for (const auto& row : detail::require<std::vector<std::vector<double>>>(jf, "ego_history", id)) {
      if (row.size() != 5) throw SchemaError(id, "ego_history", "rows must be [t, x, y, heading, speed]");
      f.ego_history.push_back({row[0], row[1], row[2], row[3], row[4]});
    }

    f.gt_future.dt = s.dt_s;
    for (const auto& row : detail::require<std::vector<std::vector<double>>>(jf, "gt_future", id)) {
      if (row.size() != 2) throw SchemaError(id, "gt_future", "rows must be [x, y]");
      f.gt_future.waypoints.push_back({row[0], row[1]});
    }

    const auto occ = detail::require<json>(jf, "occupancy", id);
    if (!occ.is_array()) throw SchemaError(id, "occupancy", "must be an array");
    for (const auto& jo : occ) {
      OccupancyGrid g;
      g.resolution = detail::require<double>(jo, "resolution", id);
      const auto origin = detail::require<std::vector<double>>(jo, "origin", id);
      if (origin.size() != 2) throw SchemaError(id, "origin", "must be [x, y]");
      g.origin_x = origin[0];
      g.origin_y = origin[1];
      g.width = detail::require<int>(jo, "width", id);
      g.height = detail::require<int>(jo, "height", id);
      if (g.width < 0 || g.height < 0) throw SchemaError(id, "occupancy", "negative grid size");
      decode_occupancy_bits(detail::read_bytes(resolve(detail::require<std::string>(jo, "path", id)), id, "occupancy"),
                            g, id);
      f.occupancy.push_back(std::move(g));
    }

    const auto diags = validate_frame(f, s.horizon_steps);
    if (!diags.empty()) throw InvariantError(id, diags.front().code, diags.front().message);
    s.frames.push_back(std::move(f));
  }
  return s;
}

/// Writes `manifest.json` plus per-frame assets under `dir`. LiDAR and radar
/// values are stored as float32.
inline std::filesystem::path save_scenario(const Scenario& s, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  fs::create_directories(dir);
  json doc;
  doc["version"] = s.version;
  doc["dt_s"] = s.dt_s;
  doc["horizon_steps"] = s.horizon_steps;
  doc["frames"] = json::array();
  for (std::size_t fi = 0; fi < s.frames.size(); ++fi) {
    const Frame& f = s.frames[fi];
    char sub[32];
    std::snprintf(sub, sizeof(sub), "frames/%04zu", fi);
    fs::create_directories(dir / sub);
    const std::string prefix = std::string(sub) + "/";

    json jf;
    jf["frame_id"] = f.frame_id;
    jf["cameras"] = json::array();
    for (std::size_t c = 0; c < f.cameras.size(); ++c) {
      const std::string rel = prefix + "cam" + std::to_string(c) + ".png";
      png::write(dir / rel, f.cameras[c]);
      jf["cameras"].push_back(rel);
    }
    detail::write_bytes(dir / (prefix + "lidar.bin"), encode_lidar(f.lidar));
    jf["lidar"] = prefix + "lidar.bin";
    detail::write_bytes(dir / (prefix + "radar.bin"), encode_radar(f.radar));
    jf["radar"] = prefix + "radar.bin";
    jf["ego_history"] = json::array();
    for (const auto& e : f.ego_history) jf["ego_history"].push_back({e.t, e.x, e.y, e.heading, e.speed});
    jf["gt_future"] = json::array();
    for (const auto& w : f.gt_future.waypoints) jf["gt_future"].push_back({w.x, w.y});
    jf["occupancy"] = json::array();
    for (std::size_t i = 0; i < f.occupancy.size(); ++i) {
      const auto& g = f.occupancy[i];
      const std::string rel = prefix + "occ" + std::to_string(i) + ".bin";
      detail::write_bytes(dir / rel, encode_occupancy_bits(g));
      jf["occupancy"].push_back({{"resolution", g.resolution},
                                 {"origin", {g.origin_x, g.origin_y}},
                                 {"width", g.width},
                                 {"height", g.height},
                                 {"path", rel}});
    }
    doc["frames"].push_back(std::move(jf));
  }
  const fs::path manifest = dir / "manifest.json";
  std::ofstream os(manifest);
  if (!os) throw IoError("", manifest.string(), "cannot open for writing");
  os << doc.dump(2) << '\n';
  return manifest;
}

}  // namespace drivebench
