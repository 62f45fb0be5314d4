// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/backends.hpp"

#include "anonypipe/errors.hpp"
#include "anonypipe/version.hpp"

namespace anonypipe {

namespace {

// FNV-1a 64-bit, then splitmix64 expansion. Fixed published constants keep
// stub embeddings identical across builds and process restarts.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n,
                      std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

StubDetector::StubDetector(DetectionManifest sidecar)
    : sidecar_(std::move(sidecar)) {}

DetectorCapability StubDetector::capability() const {
  return DetectorCapability{"stub", kToolkitVersion,
                            /*safe_for_concurrent_calls=*/true};
}

std::vector<FaceDetection> StubDetector::detect(const ImageBuffer& img,
                                                const std::string& image_id) {
  for (const ImageEntry& entry : sidecar_.entries) {
    if (entry.image_path != image_id) continue;
    for (const FaceDetection& face : entry.faces) {
      if (!face.box.valid() || !img.bounds().contains(face.box)) {
        throw InvalidGeometryError("stub detector: sidecar box for '" +
                                   image_id + "' lies outside the image");
      }
    }
    return entry.faces;
  }
  return {};
}

StubInpainter::StubInpainter(StubInpainterOptions options)
    : options_(std::move(options)) {}

InpainterCapability StubInpainter::capability() const {
  return InpainterCapability{options_.identity ? "stub-identity" : "stub",
                             kToolkitVersion,
                             /*native_resolution=*/512,
                             /*safe_for_concurrent_calls=*/true,
                             /*deterministic=*/true};
}

ImageBuffer StubInpainter::inpaint(const ImageBuffer& patch,
                                   const MaskBuffer& mask,
                                   const InpaintRequest& request) {
  if (mask.width != patch.width() || mask.height != patch.height()) {
    throw BackendError("stub inpainter: mask dimensions do not match patch");
  }
  if (options_.fail_seeds.count(request.seed) != 0) {
    throw BackendError("stub inpainter: injected failure for seed " +
                       std::to_string(request.seed));
  }
  if (options_.identity) {
    return patch;
  }
  const std::uint8_t r = static_cast<std::uint8_t>(request.seed % 256);
  const std::uint8_t g = static_cast<std::uint8_t>((request.seed / 256) % 256);
  const std::uint8_t b =
      static_cast<std::uint8_t>((request.seed / 65536) % 256);
  ImageBuffer out = patch;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      out.at(x, y, 0) = r;
      out.at(x, y, 1) = g;
      out.at(x, y, 2) = b;
    }
  }
  return out;
}

StubEmbedder::StubEmbedder(int dim) : dim_(dim) {
  if (dim < 2) {
    throw ConfigError("stub embedder: dimension must be >= 2");
  }
}

EmbedderCapability StubEmbedder::capability() const {
  return EmbedderCapability{"stub", kToolkitVersion, dim_};
}

std::vector<double> StubEmbedder::embed(const ImageBuffer& img) {
  return stub_embedding(img, dim_);
}

std::vector<double> stub_embedding(const ImageBuffer& img, int dim) {
  if (dim < 2) {
    throw ConfigError("stub embedder: dimension must be >= 2");
  }
  const std::uint64_t h =
      fnv1a64(img.pixels().data(), img.pixels().size(),
              static_cast<std::uint64_t>(img.width()) * 0x1000001ull +
                  static_cast<std::uint64_t>(img.height()));
  std::vector<double> v(dim);
  bool all_zero = true;
  for (int i = 0; i < dim; ++i) {
    const std::uint64_t bits = splitmix64(h + static_cast<std::uint64_t>(i));
    // Top 53 bits to a double in [-1, 1).
    v[i] = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
    all_zero = all_zero && v[i] == 0.0;
  }
  if (all_zero) v[0] = 1.0;
  return v;
}

void check_inpaint_contract(const ImageBuffer& patch, const MaskBuffer& mask,
                            const ImageBuffer& result,
                            const std::string& backend_name) {
  if (result.width() != patch.width() || result.height() != patch.height()) {
    throw BackendError("inpaint backend '" + backend_name +
                       "' returned a raster of different dimensions");
  }
  for (int y = 0; y < patch.height(); ++y) {
    for (int x = 0; x < patch.width(); ++x) {
      if (mask.at(x, y) != 0) continue;
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        if (result.at(x, y, c) != patch.at(x, y, c)) {
          throw BackendError("inpaint backend '" + backend_name +
                             "' modified pixels outside the mask");
        }
      }
    }
  }
}

}  // namespace anonypipe
