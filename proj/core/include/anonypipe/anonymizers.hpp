// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anonypipe/backends.hpp"
#include "anonypipe/detection.hpp"
#include "anonypipe/image.hpp"

namespace anonypipe {

struct GaussConfig {
  double sigma = 3.0;
  int kernel_radius = 9;  // ceil(3 * sigma) for the default sigma

  static GaussConfig with_sigma(double sigma);
};

struct PixelConfig {
  int patch_size = 8;
};

struct LdfaConfig {
  int context_pad = 32;
  int model_resolution = 512;
  std::string prompt;
  double cfg_scale = 1.0;
  std::string sampler_id = "k_euler_a";
  int inference_steps = 50;
  std::uint64_t base_seed = 0;
};

/// Normalized 1-D Gaussian taps for offsets [-radius, radius]; sums to 1.
std::vector<double> make_gauss_kernel(const GaussConfig& cfg);

/// Blurs the boxed region in place with a separable Gaussian computed on
/// the face crop alone (edge-replicate padding); the surroundings never
/// bleed in and never change.
void anonymize_gauss(ImageBuffer& img, const BoundingBox& box,
                     const GaussConfig& cfg);

/// Overwrites the boxed region with the channel-maximal value 255.
void anonymize_crop(ImageBuffer& img, const BoundingBox& box);

/// Tiles the boxed region into patch_size^2 tiles anchored at the box's
/// top-left (trailing tiles truncated at the far edges) and sets each tile
/// to its per-channel mean, rounded half away from zero.
void anonymize_pixel(ImageBuffer& img, const BoundingBox& box,
                     const PixelConfig& cfg);

enum class FaceStatus { kOk, kFailed };

struct FaceOutcome {
  FaceDetection face;
  BoundingBox padded_box;
  std::uint64_t seed = 0;
  FaceStatus status = FaceStatus::kOk;
  std::string error;  // set when status == kFailed
};

struct LdfaResult {
  ImageBuffer image;
  std::vector<FaceOutcome> faces;  // in processing order
  bool complete = true;            // false when any face failed
};

/// The two-stage pipeline body for a single image. Faces are processed in
/// descending-confidence order (ties: y0, then x0). Per face: pad the box
/// by context_pad and clip to the image, crop the padded patch from the
/// working canvas, scale to model_resolution^2, mask the inner face region
/// (floor/ceil mapping so the mask never under-covers), invoke the
/// inpainter with seed = base_seed + face index, scale back, and paste the
/// inner region only. A backend failure skips that face, records the error
/// and marks the run incomplete; it is never silently dropped.
LdfaResult anonymize_ldfa(const ImageBuffer& img,
                          std::span<const FaceDetection> faces,
                          const LdfaConfig& cfg, InpaintBackend& inpainter);

/// Mask over a model_resolution^2 patch marking the inner face region.
/// Exposed for tests; `inner` is relative to the padded patch of size
/// patch_w x patch_h.
MaskBuffer make_inpaint_mask(const BoundingBox& inner, int patch_w,
                             int patch_h, int model_resolution);

}  // namespace anonypipe
