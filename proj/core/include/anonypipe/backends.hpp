// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "anonypipe/detection.hpp"
#include "anonypipe/image.hpp"

namespace anonypipe {

struct DetectorCapability {
  std::string name;
  std::string version;
  bool safe_for_concurrent_calls = false;
};

struct InpainterCapability {
  std::string name;
  std::string version;
  int native_resolution = 0;
  bool safe_for_concurrent_calls = false;
  bool deterministic = true;  // false when the engine ignores seeds
};

struct EmbedderCapability {
  std::string name;
  std::string version;
  int embedding_dim = 0;
};

/// Face detector seam. Implementations must be deterministic per image
/// bytes; `image_id` lets path-keyed test doubles look up their payload.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual DetectorCapability capability() const = 0;
  virtual std::vector<FaceDetection> detect(const ImageBuffer& img,
                                            const std::string& image_id) = 0;
};

struct InpaintRequest {
  std::string prompt;
  double cfg_scale = 1.0;
  std::string sampler_id = "k_euler_a";
  int inference_steps = 50;
  std::uint64_t seed = 0;
};

/// Image-to-image inpainting seam. Output dimensions must equal the input
/// patch dimensions, and pixels where mask = 0 must come back bit-exact;
/// the pipeline re-checks that contract after every call.
class InpaintBackend {
 public:
  virtual ~InpaintBackend() = default;
  virtual InpainterCapability capability() const = 0;
  virtual ImageBuffer inpaint(const ImageBuffer& patch,
                              const MaskBuffer& mask,
                              const InpaintRequest& request) = 0;
};

/// Face embedding seam; returns vectors of exactly embedding_dim values.
class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  virtual EmbedderCapability capability() const = 0;
  virtual std::vector<double> embed(const ImageBuffer& img) = 0;
};

/// Test double that replays detections recorded in a sidecar manifest,
/// keyed by image path. Boxes outside the queried image are an error.
class StubDetector : public DetectorBackend {
 public:
  explicit StubDetector(DetectionManifest sidecar);
  DetectorCapability capability() const override;
  std::vector<FaceDetection> detect(const ImageBuffer& img,
                                    const std::string& image_id) override;

 private:
  DetectionManifest sidecar_;
};

struct StubInpainterOptions {
  bool identity = false;  // return the input patch unmodified
  std::set<std::uint64_t> fail_seeds;  // simulate backend failures
};

/// Deterministic stand-in for the diffusion model: fills masked pixels with
/// the seed-derived color (seed, seed/256, seed/65536 mod 256 per channel).
class StubInpainter : public InpaintBackend {
 public:
  explicit StubInpainter(StubInpainterOptions options = {});
  InpainterCapability capability() const override;
  ImageBuffer inpaint(const ImageBuffer& patch, const MaskBuffer& mask,
                      const InpaintRequest& request) override;

 private:
  StubInpainterOptions options_;
};

/// Deterministic embedding from a fixed byte hash of the pixels, expanded
/// to `dim` values; stable across process restarts.
class StubEmbedder : public EmbedBackend {
 public:
  explicit StubEmbedder(int dim = 2622);
  EmbedderCapability capability() const override;
  std::vector<double> embed(const ImageBuffer& img) override;

 private:
  int dim_;
};

/// Raw stub embedding, exposed for direct use in tests and eval code.
std::vector<double> stub_embedding(const ImageBuffer& img, int dim);

/// Throws BackendError unless result has the patch's dimensions and all
/// mask = 0 pixels are bit-identical to the input.
void check_inpaint_contract(const ImageBuffer& patch, const MaskBuffer& mask,
                            const ImageBuffer& result,
                            const std::string& backend_name);

}  // namespace anonypipe
