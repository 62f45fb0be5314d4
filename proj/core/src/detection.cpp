// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/detection.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anonypipe/backends.hpp"
#include "anonypipe/errors.hpp"

namespace anonypipe {

bool face_order(const FaceDetection& a, const FaceDetection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
  return a.box.x0 < b.box.x0;
}

FaceDetection make_face(const BoundingBox& box, double confidence) {
  return FaceDetection{box, confidence, size_category(box)};
}

std::vector<FaceDetection> detect_faces(const ImageBuffer& img,
                                        DetectorBackend& backend,
                                        const std::string& image_id,
                                        double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("detection threshold must be in [0, 1]");
  }
  std::vector<FaceDetection> raw;
  try {
    raw = backend.detect(img, image_id);
  } catch (const std::exception& e) {
    throw BackendError("detector '" + backend.capability().name +
                       "' failed on '" + image_id + "': " + e.what());
  }

  std::vector<FaceDetection> kept;
  kept.reserve(raw.size());
  for (const FaceDetection& det : raw) {
    if (det.confidence < 0.0 || det.confidence > 1.0) {
      throw BackendError("detector '" + backend.capability().name +
                         "' returned confidence outside [0, 1]");
    }
    if (det.confidence < threshold) continue;
    // Partially out-of-frame detections are clipped, not dropped.
    const auto clipped = intersect(det.box, img.bounds());
    if (!clipped) continue;
    kept.push_back(make_face(*clipped, det.confidence));
  }
  std::sort(kept.begin(), kept.end(), face_order);
  return kept;
}

std::int64_t count_noa(const DetectionManifest& manifest) {
  std::int64_t total = 0;
  for (const ImageEntry& entry : manifest.entries) {
    total += static_cast<std::int64_t>(entry.faces.size());
  }
  return total;
}

std::string format_confidence(double value) {
  char buf[400];
  for (int precision = 4; precision <= 345; ++precision) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                   std::chars_format::fixed, precision);
    if (res.ec != std::errc{}) break;
    double back = 0.0;
    std::from_chars(buf, res.ptr, back);
    if (back == value) {
      return std::string(buf, res.ptr);
    }
  }
  throw ManifestError("cannot format confidence value");
}

namespace {

std::string json_string(const std::string& s) {
  return nlohmann::json(s).dump();
}

void validate_entry(const ImageEntry& entry) {
  if (entry.image_w <= 0 || entry.image_h <= 0) {
    throw ManifestError("manifest entry '" + entry.image_path +
                        "' has non-positive image dimensions");
  }
  const BoundingBox bounds{0, 0, entry.image_w, entry.image_h};
  for (const FaceDetection& face : entry.faces) {
    if (!face.box.valid()) {
      throw ManifestError("manifest entry '" + entry.image_path +
                          "' contains a degenerate box");
    }
    if (!bounds.contains(face.box)) {
      throw ManifestError("manifest entry '" + entry.image_path +
                          "' contains a box outside image bounds");
    }
    if (face.confidence < 0.0 || face.confidence > 1.0) {
      throw ManifestError("manifest entry '" + entry.image_path +
                          "' contains a confidence outside [0, 1]");
    }
    if (face.size_category != size_category(face.box)) {
      throw ManifestError("manifest entry '" + entry.image_path +
                          "' has a size_category inconsistent with its box");
    }
  }
}

}  // namespace

std::string serialize_manifest(const DetectionManifest& manifest) {
  std::vector<const ImageEntry*> ordered;
  ordered.reserve(manifest.entries.size());
  std::set<std::string> seen;
  for (const ImageEntry& entry : manifest.entries) {
    if (!seen.insert(entry.image_path).second) {
      throw ManifestError("duplicate image path '" + entry.image_path + "'");
    }
    validate_entry(entry);
    ordered.push_back(&entry);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const ImageEntry* a, const ImageEntry* b) {
              return a->image_path < b->image_path;
            });

  std::ostringstream out;
  out << "{\n  \"schema_version\": " << manifest.schema_version
      << ",\n  \"entries\": [";
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const ImageEntry& e = *ordered[i];
    out << (i == 0 ? "" : ",") << "\n    {\n      \"image_path\": "
        << json_string(e.image_path) << ",\n      \"image_w\": " << e.image_w
        << ",\n      \"image_h\": " << e.image_h
        << ",\n      \"faces\": [";
    for (std::size_t j = 0; j < e.faces.size(); ++j) {
      const FaceDetection& f = e.faces[j];
      out << (j == 0 ? "" : ",") << "\n        {\"box\": [" << f.box.x0
          << ", " << f.box.y0 << ", " << f.box.x1 << ", " << f.box.y1
          << "], \"confidence\": " << format_confidence(f.confidence)
          << ", \"size_category\": \""
          << size_category_letter(f.size_category) << "\"}";
    }
    out << (e.faces.empty() ? "]" : "\n      ]") << "\n    }";
  }
  out << (ordered.empty() ? "]" : "\n  ]") << "\n}\n";
  return out.str();
}

DetectionManifest parse_manifest(const std::string& json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") +
                        e.what());
  }

  DetectionManifest manifest;
  try {
    manifest.schema_version = root.at("schema_version").get<int>();
    if (manifest.schema_version != 1) {
      throw ManifestError("unsupported manifest schema_version " +
                          std::to_string(manifest.schema_version));
    }
    for (const auto& je : root.at("entries")) {
      ImageEntry entry;
      entry.image_path = je.at("image_path").get<std::string>();
      entry.image_w = je.at("image_w").get<int>();
      entry.image_h = je.at("image_h").get<int>();
      for (const auto& jf : je.at("faces")) {
        const auto& jb = jf.at("box");
        if (!jb.is_array() || jb.size() != 4) {
          throw ManifestError("face box must be a 4-element array");
        }
        FaceDetection face;
        face.box = BoundingBox{jb[0].get<int>(), jb[1].get<int>(),
                               jb[2].get<int>(), jb[3].get<int>()};
        face.confidence = jf.at("confidence").get<double>();
        face.size_category = size_category_from_letter(
            jf.at("size_category").get<std::string>());
        entry.faces.push_back(face);
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }

  std::set<std::string> seen;
  for (const ImageEntry& entry : manifest.entries) {
    if (!seen.insert(entry.image_path).second) {
      throw ManifestError("duplicate image path '" + entry.image_path + "'");
    }
    validate_entry(entry);
  }
  return manifest;
}

DetectionManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ManifestError("cannot open manifest '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void save_manifest(const DetectionManifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ManifestError("cannot write manifest '" + path.string() + "'");
  }
  out << serialize_manifest(manifest);
}

}  // namespace anonypipe
