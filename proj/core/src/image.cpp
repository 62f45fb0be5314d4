// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "anonypipe/errors.hpp"

namespace anonypipe {

namespace {

std::uint8_t round_to_u8(double v) {
  // Round half away from zero; inputs are non-negative here.
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

void require_inside(const ImageBuffer& img, const BoundingBox& box,
                    const char* op) {
  if (!box.valid()) {
    throw InvalidGeometryError(std::string(op) + ": degenerate box");
  }
  if (!img.bounds().contains(box)) {
    throw InvalidGeometryError(std::string(op) + ": box exceeds image bounds");
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw InvalidGeometryError("ImageBuffer: negative dimensions");
  }
  data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

ImageBuffer::ImageBuffer(int width, int height,
                         std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), data_(std::move(pixels)) {
  if (width < 0 || height < 0) {
    throw InvalidGeometryError("ImageBuffer: negative dimensions");
  }
  if (data_.size() !=
      static_cast<std::size_t>(width) * height * kChannels) {
    throw InvalidGeometryError("ImageBuffer: pixel count does not match "
                               "width * height * 3");
  }
}

MaskBuffer MaskBuffer::zeros(int w, int h) {
  MaskBuffer m;
  m.width = w;
  m.height = h;
  m.data.assign(static_cast<std::size_t>(w) * h, 0);
  return m;
}

ImageBuffer crop(const ImageBuffer& img, const BoundingBox& box) {
  require_inside(img, box, "crop");
  ImageBuffer out(box.width(), box.height());
  const std::size_t row_bytes =
      static_cast<std::size_t>(box.width()) * ImageBuffer::kChannels;
  for (int y = 0; y < box.height(); ++y) {
    const std::uint8_t* src = &img.pixels()[(static_cast<std::size_t>(
        box.y0 + y) * img.width() + box.x0) * ImageBuffer::kChannels];
    std::uint8_t* dst =
        &out.pixels()[static_cast<std::size_t>(y) * row_bytes];
    std::memcpy(dst, src, row_bytes);
  }
  return out;
}

void paste(ImageBuffer& dst, const ImageBuffer& patch,
           const BoundingBox& box) {
  require_inside(dst, box, "paste");
  if (patch.width() != box.width() || patch.height() != box.height()) {
    throw InvalidGeometryError("paste: patch dimensions do not match box");
  }
  const std::size_t row_bytes =
      static_cast<std::size_t>(box.width()) * ImageBuffer::kChannels;
  for (int y = 0; y < box.height(); ++y) {
    const std::uint8_t* src =
        &patch.pixels()[static_cast<std::size_t>(y) * row_bytes];
    std::uint8_t* out = &dst.pixels()[(static_cast<std::size_t>(box.y0 + y) *
                                       dst.width() + box.x0) *
                                      ImageBuffer::kChannels];
    std::memcpy(out, src, row_bytes);
  }
}

ImageBuffer resize(const ImageBuffer& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) {
    throw InvalidGeometryError("resize: target dimensions must be >= 1");
  }
  if (img.empty()) {
    throw InvalidGeometryError("resize: empty source image");
  }
  if (out_w == img.width() && out_h == img.height()) {
    return img;
  }

  ImageBuffer out(out_w, out_h);
  const double scale_x = static_cast<double>(img.width()) / out_w;
  const double scale_y = static_cast<double>(img.height()) / out_h;

  for (int oy = 0; oy < out_h; ++oy) {
    const double sy = (oy + 0.5) * scale_y - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double fy = sy - y0;
    const int ya = std::clamp(y0, 0, img.height() - 1);
    const int yb = std::clamp(y0 + 1, 0, img.height() - 1);
    for (int ox = 0; ox < out_w; ++ox) {
      const double sx = (ox + 0.5) * scale_x - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double fx = sx - x0;
      const int xa = std::clamp(x0, 0, img.width() - 1);
      const int xb = std::clamp(x0 + 1, 0, img.width() - 1);
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        const double top = (1.0 - fx) * img.at(xa, ya, c) +
                           fx * img.at(xb, ya, c);
        const double bottom = (1.0 - fx) * img.at(xa, yb, c) +
                              fx * img.at(xb, yb, c);
        out.at(ox, oy, c) = round_to_u8((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

}  // namespace anonypipe
