// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anonypipe/geometry.hpp"
#include "anonypipe/image.hpp"

namespace anonypipe {

struct FaceDetection {
  BoundingBox box;
  double confidence = 0.0;  // in [0, 1]
  SizeCategory size_category = SizeCategory::kSmall;

  bool operator==(const FaceDetection& other) const = default;
};

/// Canonical face ordering used everywhere detections are sequenced:
/// confidence descending, then y0 ascending, then x0 ascending.
bool face_order(const FaceDetection& a, const FaceDetection& b);

FaceDetection make_face(const BoundingBox& box, double confidence);

struct ImageEntry {
  std::string image_path;
  int image_w = 0;
  int image_h = 0;
  std::vector<FaceDetection> faces;

  bool operator==(const ImageEntry& other) const = default;
};

struct DetectionManifest {
  int schema_version = 1;
  std::vector<ImageEntry> entries;

  bool operator==(const DetectionManifest& other) const = default;
};

class DetectorBackend;

/// Runs the backend, drops detections below `threshold`, clips boxes to the
/// image, recomputes size categories and sorts into the canonical order.
/// `image_id` identifies the image to backends that key on it (the stub).
std::vector<FaceDetection> detect_faces(const ImageBuffer& img,
                                        DetectorBackend& backend,
                                        const std::string& image_id,
                                        double threshold);

/// Total face count across all manifest entries.
std::int64_t count_noa(const DetectionManifest& manifest);

/// Wire format: schema_version 1; entries sorted by image_path; boxes as
/// [x0,y0,x1,y1]; confidence printed with at least four fractional digits
/// and enough precision to round-trip the double exactly.
std::string serialize_manifest(const DetectionManifest& manifest);
DetectionManifest parse_manifest(const std::string& json_text);

DetectionManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DetectionManifest& manifest,
                   const std::filesystem::path& path);

/// Fixed-point-free decimal formatting: shortest representation that parses
/// back to the same double, zero-padded to >= 4 fractional digits.
std::string format_confidence(double value);

}  // namespace anonypipe
