// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/geometry.hpp"

#include <algorithm>

#include "anonypipe/errors.hpp"

namespace anonypipe {

SizeCategory size_category(const BoundingBox& box) {
  if (!box.valid()) {
    throw InvalidGeometryError("size_category: degenerate box");
  }
  const std::int64_t area = box.area();
  if (area < kSmallAreaLimit) return SizeCategory::kSmall;
  if (area >= kLargeAreaLimit) return SizeCategory::kLarge;
  return SizeCategory::kMedium;
}

std::string size_category_letter(SizeCategory c) {
  switch (c) {
    case SizeCategory::kSmall:
      return "S";
    case SizeCategory::kMedium:
      return "M";
    case SizeCategory::kLarge:
      return "L";
  }
  throw Error("size_category_letter: unreachable");
}

SizeCategory size_category_from_letter(const std::string& letter) {
  if (letter == "S") return SizeCategory::kSmall;
  if (letter == "M") return SizeCategory::kMedium;
  if (letter == "L") return SizeCategory::kLarge;
  throw ManifestError("unknown size category '" + letter + "'");
}

BoundingBox pad_and_clip(const BoundingBox& box, int pad, int image_w,
                         int image_h) {
  if (!box.valid()) {
    throw InvalidGeometryError("pad_and_clip: degenerate box");
  }
  if (pad < 0) {
    throw InvalidGeometryError("pad_and_clip: negative padding");
  }
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > image_w || box.y1 > image_h) {
    throw InvalidGeometryError("pad_and_clip: box outside image bounds");
  }
  return BoundingBox{std::max(0, box.x0 - pad), std::max(0, box.y0 - pad),
                     std::min(image_w, box.x1 + pad),
                     std::min(image_h, box.y1 + pad)};
}

std::optional<BoundingBox> intersect(const BoundingBox& a,
                                     const BoundingBox& b) {
  const BoundingBox r{std::max(a.x0, b.x0), std::max(a.y0, b.y0),
                      std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  if (!r.valid()) return std::nullopt;
  return r;
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const auto inter = intersect(a, b);
  if (!inter) return 0.0;
  const double inter_area = static_cast<double>(inter->area());
  const double union_area =
      static_cast<double>(a.area()) + static_cast<double>(b.area()) -
      inter_area;
  return inter_area / union_area;
}

}  // namespace anonypipe
