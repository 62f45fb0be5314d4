// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anonypipe/anonymizers.hpp"
#include "anonypipe/backends.hpp"
#include "anonypipe/detection.hpp"
#include "anonypipe/metrics.hpp"
#include "anonypipe/plugin.hpp"

namespace anonypipe {

enum class Method { kGauss, kCrop, kPixel, kLdfa };

Method parse_method(const std::string& name);
std::string method_name(Method method);

struct RunConfig {
  Method method = Method::kLdfa;
  GaussConfig gauss;
  PixelConfig pixel;
  LdfaConfig ldfa;
  double threshold = 0.4;
  std::uint64_t base_seed = 0;
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  int jobs = 1;
  std::string output_format = "png";  // "png" or "jpeg"
  int jpeg_quality = 95;
  std::string detector_backend = "stub";
  std::string inpainter_backend = "stub";
  std::string embedder_backend = "stub";
  BackendOptions backends;
};

/// Throws ConfigError with a diagnostic on any invalid field.
void validate_config(const RunConfig& config);

enum class ImageStatus { kOk, kPartial, kFailed };
std::string image_status_name(ImageStatus status);

struct ImageRunRecord {
  std::string image_path;  // input-relative
  std::string output_path; // output-relative (empty when nothing written)
  ImageStatus status = ImageStatus::kOk;
  std::vector<std::string> errors;
  double wall_ms = 0.0;
};

struct RunManifest {
  RunConfig config;
  std::string toolkit_version;
  std::optional<DetectorCapability> detector;
  std::optional<InpainterCapability> inpainter;
  std::vector<ImageRunRecord> images;   // sorted by image_path
  DetectionManifest processed;          // faces actually anonymized
  std::int64_t total_detected = 0;
  std::int64_t noa = 0;                 // faces successfully anonymized
  double wall_ms = 0.0;

  bool all_ok() const;
};

std::string serialize_run_manifest(const RunManifest& manifest);

/// Strips every "timings_ms" member so two run manifests can be compared
/// for reproducibility; wall-clock noise is the one sanctioned difference.
std::string canonical_run_manifest_json(const std::string& manifest_json);

/// Pre-resolved backends; any left null are resolved from the config by
/// name. Lets tests inject instrumented backends.
struct BackendSet {
  std::unique_ptr<DetectorBackend> detector;
  std::unique_ptr<InpaintBackend> inpainter;
  std::unique_ptr<EmbedBackend> embedder;
};

/// Anonymizes every PNG/JPEG under config.input_dir into config.output_dir
/// (same relative paths, extension follows the output codec) and writes
/// run_manifest.json there. Returns 0 iff every image status is "ok".
int run_anonymize(const RunConfig& config, BackendSet backends = {});

/// Detects faces across input_dir and writes a DetectionManifest.
int run_detect(const RunConfig& config, const std::filesystem::path& out_path,
               BackendSet backends = {});

/// Detection evaluation of pred against gt; writes DetEvalReport JSON.
int run_eval_det(const std::filesystem::path& gt_path,
                 const std::filesystem::path& pred_path,
                 const std::filesystem::path& out_path,
                 std::vector<double> iou_thresholds = {});

struct EmbedEvalOptions {
  int bins = 50;
  double lo = 0.0;
  double hi = 2.0;
  std::filesystem::path svg_path;  // optional
};

/// Embedding distances between original and anonymized face crops at the
/// manifest's boxes; writes a records CSV plus a companion histogram CSV
/// (<out stem>.hist.csv).
int run_eval_embed(const std::filesystem::path& orig_dir,
                   const std::filesystem::path& anon_dir,
                   const std::filesystem::path& manifest_path,
                   const std::filesystem::path& out_csv,
                   const RunConfig& config, const EmbedEvalOptions& options,
                   BackendSet backends = {});

/// Segmentation IoU/iIoU over aligned raster pairs; ground-truth class
/// rasters are <stem>.png, optional instance rasters <stem>.inst.png.
/// With a baseline report, per-class relative IoU deltas are included.
int run_eval_seg(const std::filesystem::path& gt_dir,
                 const std::filesystem::path& pred_dir,
                 const std::vector<std::int32_t>& classes,
                 const std::filesystem::path& out_path,
                 const std::filesystem::path& baseline_path = {});

struct HistogramOptions {
  std::string column = "l2_distance";
  int bins = 50;
  double lo = 0.0;
  double hi = 2.0;
  std::filesystem::path svg_path;   // optional
  std::filesystem::path json_path;  // optional
};

/// Bins one numeric CSV column into a histogram CSV (and optional SVG).
int run_histogram(const std::filesystem::path& in_csv,
                  const std::filesystem::path& out_csv,
                  const HistogramOptions& options);

/// Class ids from the red channel of an 8-bit raster.
LabelRaster class_raster_from_image(const ImageBuffer& img);

/// Instance ids packed little-endian across RGB: id = R + 256 G + 65536 B.
LabelRaster instance_raster_from_image(const ImageBuffer& img);

}  // namespace anonypipe
