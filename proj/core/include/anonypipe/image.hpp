// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "anonypipe/geometry.hpp"

namespace anonypipe {

/// Owned 8-bit RGB raster, row-major, interleaved channels.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int width, int height, std::uint8_t fill = 0);
  ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  const std::vector<std::uint8_t>& pixels() const { return data_; }
  std::vector<std::uint8_t>& pixels() { return data_; }

  BoundingBox bounds() const { return BoundingBox{0, 0, width_, height_}; }

  bool operator==(const ImageBuffer& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 0/1 raster, used for inpainting masks.
struct MaskBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // one byte per pixel, 0 or 1

  static MaskBuffer zeros(int w, int h);
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, std::uint8_t v) {
    data[static_cast<std::size_t>(y) * width + x] = v;
  }
  bool operator==(const MaskBuffer& other) const = default;
};

/// Copies the boxed region into a new (x1-x0) x (y1-y0) buffer.
ImageBuffer crop(const ImageBuffer& img, const BoundingBox& box);

/// Replaces the boxed region of dst with patch. Patch dimensions must equal
/// the box dimensions; pixels outside the box are left untouched.
void paste(ImageBuffer& dst, const ImageBuffer& patch, const BoundingBox& box);

/// Bilinear resize with half-pixel-center coordinate mapping. Values are
/// rounded to nearest, half away from zero. Same-size resize is a copy.
ImageBuffer resize(const ImageBuffer& img, int out_w, int out_h);

}  // namespace anonypipe
