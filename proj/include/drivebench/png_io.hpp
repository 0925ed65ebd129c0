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

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "drivebench/errors.hpp"
#include "drivebench/types.hpp"

namespace drivebench::png {

/// Decodes a PNG file into 8-bit RGB. Other colour types are converted.
inline RasterImage read(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("", path.string(), std::string("cannot read PNG: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  RasterImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw SchemaError("", path.string(), "corrupt PNG: " + msg);
  }
  return out;
}

/// Writes 8-bit RGB.
inline void write(const std::filesystem::path& path, const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr))
    throw IoError("", path.string(), std::string("cannot write PNG: ") + image.message);
}

}  // namespace drivebench::png
