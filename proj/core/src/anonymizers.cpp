// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/anonymizers.hpp"

#include <algorithm>
#include <cmath>

#include "anonypipe/errors.hpp"

namespace anonypipe {

namespace {

std::uint8_t round_half_away(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

void require_box_inside(const ImageBuffer& img, const BoundingBox& box,
                        const char* op) {
  if (!box.valid()) {
    throw InvalidGeometryError(std::string(op) + ": degenerate box");
  }
  if (!img.bounds().contains(box)) {
    throw InvalidGeometryError(std::string(op) +
                               ": box exceeds image bounds");
  }
}

}  // namespace

GaussConfig GaussConfig::with_sigma(double sigma) {
  if (sigma <= 0.0) {
    throw ConfigError("gauss sigma must be > 0");
  }
  return GaussConfig{sigma, static_cast<int>(std::ceil(3.0 * sigma))};
}

std::vector<double> make_gauss_kernel(const GaussConfig& cfg) {
  if (cfg.sigma <= 0.0) {
    throw ConfigError("gauss sigma must be > 0");
  }
  if (cfg.kernel_radius < 0) {
    throw ConfigError("gauss kernel radius must be >= 0");
  }
  std::vector<double> taps(2 * cfg.kernel_radius + 1);
  double sum = 0.0;
  for (int i = -cfg.kernel_radius; i <= cfg.kernel_radius; ++i) {
    const double w =
        std::exp(-(static_cast<double>(i) * i) / (2.0 * cfg.sigma * cfg.sigma));
    taps[i + cfg.kernel_radius] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

void anonymize_gauss(ImageBuffer& img, const BoundingBox& box,
                     const GaussConfig& cfg) {
  require_box_inside(img, box, "anonymize_gauss");
  const std::vector<double> taps = make_gauss_kernel(cfg);
  const int radius = cfg.kernel_radius;
  const int w = box.width();
  const int h = box.height();
  const ImageBuffer face = crop(img, box);

  // Horizontal pass into a float buffer, then vertical; a single final
  // rounding keeps the result equal to the exact 2-D convolution.
  std::vector<double> mid(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int sx = std::clamp(x + k, 0, w - 1);
          acc += taps[k + radius] * face.at(sx, y, c);
        }
        mid[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
    }
  }
  ImageBuffer blurred(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int sy = std::clamp(y + k, 0, h - 1);
          acc += taps[k + radius] *
                 mid[(static_cast<std::size_t>(sy) * w + x) * 3 + c];
        }
        blurred.at(x, y, c) = round_half_away(acc);
      }
    }
  }
  paste(img, blurred, box);
}

void anonymize_crop(ImageBuffer& img, const BoundingBox& box) {
  require_box_inside(img, box, "anonymize_crop");
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      img.at(x, y, 0) = 255;
      img.at(x, y, 1) = 255;
      img.at(x, y, 2) = 255;
    }
  }
}

void anonymize_pixel(ImageBuffer& img, const BoundingBox& box,
                     const PixelConfig& cfg) {
  require_box_inside(img, box, "anonymize_pixel");
  if (cfg.patch_size < 1) {
    throw ConfigError("pixel patch size must be >= 1");
  }
  for (int ty = box.y0; ty < box.y1; ty += cfg.patch_size) {
    const int tile_y1 = std::min(box.y1, ty + cfg.patch_size);
    for (int tx = box.x0; tx < box.x1; tx += cfg.patch_size) {
      const int tile_x1 = std::min(box.x1, tx + cfg.patch_size);
      const int count = (tile_x1 - tx) * (tile_y1 - ty);
      for (int c = 0; c < 3; ++c) {
        std::int64_t sum = 0;
        for (int y = ty; y < tile_y1; ++y) {
          for (int x = tx; x < tile_x1; ++x) {
            sum += img.at(x, y, c);
          }
        }
        const std::uint8_t mean =
            round_half_away(static_cast<double>(sum) / count);
        for (int y = ty; y < tile_y1; ++y) {
          for (int x = tx; x < tile_x1; ++x) {
            img.at(x, y, c) = mean;
          }
        }
      }
    }
  }
}

MaskBuffer make_inpaint_mask(const BoundingBox& inner, int patch_w,
                             int patch_h, int model_resolution) {
  if (!inner.valid() || inner.x0 < 0 || inner.y0 < 0 ||
      inner.x1 > patch_w || inner.y1 > patch_h) {
    throw InvalidGeometryError("make_inpaint_mask: inner region outside "
                               "patch");
  }
  const double sx = static_cast<double>(model_resolution) / patch_w;
  const double sy = static_cast<double>(model_resolution) / patch_h;
  // Floor the near edges, ceil the far edges: the mapped mask may over-cover
  // the face but never under-covers it.
  const int mx0 = std::clamp(
      static_cast<int>(std::floor(inner.x0 * sx)), 0, model_resolution - 1);
  const int my0 = std::clamp(
      static_cast<int>(std::floor(inner.y0 * sy)), 0, model_resolution - 1);
  const int mx1 = std::clamp(static_cast<int>(std::ceil(inner.x1 * sx)),
                             mx0 + 1, model_resolution);
  const int my1 = std::clamp(static_cast<int>(std::ceil(inner.y1 * sy)),
                             my0 + 1, model_resolution);

  MaskBuffer mask = MaskBuffer::zeros(model_resolution, model_resolution);
  for (int y = my0; y < my1; ++y) {
    for (int x = mx0; x < mx1; ++x) {
      mask.set(x, y, 1);
    }
  }
  return mask;
}

LdfaResult anonymize_ldfa(const ImageBuffer& img,
                          std::span<const FaceDetection> faces,
                          const LdfaConfig& cfg, InpaintBackend& inpainter) {
  if (cfg.context_pad < 0) {
    throw ConfigError("ldfa context_pad must be >= 0");
  }
  if (cfg.model_resolution < 64) {
    throw ConfigError("ldfa model_resolution must be >= 64");
  }
  if (cfg.inference_steps < 1) {
    throw ConfigError("ldfa inference_steps must be >= 1");
  }
  for (const FaceDetection& face : faces) {
    require_box_inside(img, face.box, "anonymize_ldfa");
  }

  std::vector<FaceDetection> ordered(faces.begin(), faces.end());
  std::sort(ordered.begin(), ordered.end(), face_order);

  LdfaResult result;
  result.image = img;
  result.faces.reserve(ordered.size());

  const std::string backend_name = inpainter.capability().name;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const FaceDetection& face = ordered[i];
    FaceOutcome outcome;
    outcome.face = face;
    outcome.seed = cfg.base_seed + static_cast<std::uint64_t>(i);
    outcome.padded_box = pad_and_clip(face.box, cfg.context_pad, img.width(),
                                      img.height());
    try {
      // Context is read from the progressively updated canvas so that
      // already-anonymized neighbors condition later inpaintings.
      const ImageBuffer patch = crop(result.image, outcome.padded_box);
      const ImageBuffer model_in =
          resize(patch, cfg.model_resolution, cfg.model_resolution);
      const BoundingBox inner{face.box.x0 - outcome.padded_box.x0,
                              face.box.y0 - outcome.padded_box.y0,
                              face.box.x1 - outcome.padded_box.x0,
                              face.box.y1 - outcome.padded_box.y0};
      const MaskBuffer mask = make_inpaint_mask(
          inner, patch.width(), patch.height(), cfg.model_resolution);

      InpaintRequest request;
      request.prompt = cfg.prompt;
      request.cfg_scale = cfg.cfg_scale;
      request.sampler_id = cfg.sampler_id;
      request.inference_steps = cfg.inference_steps;
      request.seed = outcome.seed;

      const ImageBuffer model_out = inpainter.inpaint(model_in, mask, request);
      check_inpaint_contract(model_in, mask, model_out, backend_name);

      // An unchanged model output means the backend made no edit; writing
      // back the resampled patch would only degrade the face region, so the
      // canvas is left untouched for that face.
      if (model_out != model_in) {
        const ImageBuffer back =
            resize(model_out, patch.width(), patch.height());
        paste(result.image, crop(back, inner), face.box);
      }
    } catch (const std::exception& e) {
      outcome.status = FaceStatus::kFailed;
      outcome.error = e.what();
      result.complete = false;
    }
    result.faces.push_back(std::move(outcome));
  }
  return result;
}

}  // namespace anonypipe
