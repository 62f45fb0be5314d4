// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace anonypipe {

/// Axis-aligned pixel rectangle, half-open: [x0, x1) x [y0, y1).
/// Half-open edges keep area and paste arithmetic exact.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool valid() const { return x0 < x1 && y0 < y1; }
  bool contains(const BoundingBox& other) const {
    return x0 <= other.x0 && y0 <= other.y0 && x1 >= other.x1 &&
           y1 >= other.y1;
  }
  bool operator==(const BoundingBox& other) const = default;
};

/// Face-size bucket. Boundaries are pixel areas 32^2 and 96^2; the lower
/// bound of each bucket is inclusive so that the three buckets partition
/// all positive areas.
enum class SizeCategory { kSmall, kMedium, kLarge };

inline constexpr std::int64_t kSmallAreaLimit = 32 * 32;   // exclusive
inline constexpr std::int64_t kLargeAreaLimit = 96 * 96;   // inclusive

SizeCategory size_category(const BoundingBox& box);

/// "S" / "M" / "L", the manifest wire encoding.
std::string size_category_letter(SizeCategory c);
SizeCategory size_category_from_letter(const std::string& letter);

/// Expands the box by `pad` pixels on all four sides, then intersects with
/// the image rectangle [0, image_w) x [0, image_h). The input box must be
/// non-degenerate and inside the image, so the result always contains it.
BoundingBox pad_and_clip(const BoundingBox& box, int pad, int image_w,
                         int image_h);

/// Intersection of two boxes; empty when they do not overlap.
std::optional<BoundingBox> intersect(const BoundingBox& a,
                                     const BoundingBox& b);

/// Area-of-intersection over area-of-union, in [0, 1].
double box_iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace anonypipe
