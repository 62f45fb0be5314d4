// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anonypipe/detection.hpp"
#include "anonypipe/geometry.hpp"

namespace anonypipe {

// ---------------------------------------------------------------------------
// Detection evaluation
// ---------------------------------------------------------------------------

/// The ten COCO-style IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

/// Average precision of `pred` against `gt` at one IoU threshold.
/// Matching is greedy in descending prediction confidence; each prediction
/// takes the unmatched ground-truth box of highest IoU >= iou_threshold
/// (IoU ties go to the earlier ground truth in canonical face order). AP is
/// the area under the all-points precision envelope over recall. Returns
/// nullopt when gt is empty (AP undefined without ground truth).
std::optional<double> match_and_ap(std::span<const FaceDetection> gt,
                                   std::span<const FaceDetection> pred,
                                   double iou_threshold);

struct DetEvalReport {
  std::optional<double> map_all;
  std::optional<double> map_s;
  std::optional<double> map_m;
  std::optional<double> map_l;
  std::int64_t noa = 0;
};

/// Mean AP over the threshold list, averaged over images that have ground
/// truth. Bucketed scores restrict ground truth to one size category and
/// ignore predictions whose best-overlap ground truth lies outside the
/// bucket (predictions overlapping no ground truth at all stay in as false
/// positives). Both manifests must cover the same image set.
DetEvalReport evaluate_detection(const DetectionManifest& gt,
                                 const DetectionManifest& pred,
                                 std::span<const double> iou_thresholds);
DetEvalReport evaluate_detection(const DetectionManifest& gt,
                                 const DetectionManifest& pred);

std::string serialize_det_report(const DetEvalReport& report);

// ---------------------------------------------------------------------------
// Segmentation metrics
// ---------------------------------------------------------------------------

/// Dense integer-id raster (class ids or instance ids).
struct LabelRaster {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> ids;  // row-major, width * height entries

  static LabelRaster filled(int w, int h, std::int32_t value);
  std::int32_t at(int x, int y) const {
    return ids[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, std::int32_t v) {
    ids[static_cast<std::size_t>(y) * width + x] = v;
  }
  bool operator==(const LabelRaster& other) const = default;
};

/// Ground-truth raster carrying a class id and an instance id per pixel.
/// Instance id 0 means "no instance assigned".
struct InstanceRaster {
  LabelRaster classes;
  LabelRaster instances;
};

/// Pixel IoU = TP / (TP + FP + FN) for one class; nullopt when the class
/// appears in neither raster.
std::optional<double> compute_iou(const LabelRaster& gt_mask,
                                  const LabelRaster& pred_mask,
                                  std::int32_t class_id);

/// Instance-weighted IoU: every ground-truth pixel of the class carries
/// weight avg_instance_size / (its instance's pixel count in this raster);
/// iIoU = iTP / (iTP + FP + iFN) with unweighted false positives.
double compute_iiou(const InstanceRaster& gt, const LabelRaster& pred_mask,
                    std::int32_t class_id, double avg_instance_size);

/// Mean instance pixel count for the class across a ground-truth dataset.
double compute_avg_instance_size(std::span<const InstanceRaster> gt_dataset,
                                 std::int32_t class_id);

/// (iou_anon - iou_base) / iou_base; iou_base must be positive.
double delta_iou_rel(double iou_anon, double iou_base);

/// Raw pixel tallies, for dataset-level aggregation across rasters.
struct SegPixelCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};
struct WeightedSegCounts {
  double itp = 0.0;
  std::int64_t fp = 0;
  double ifn = 0.0;
};
SegPixelCounts seg_pixel_counts(const LabelRaster& gt_mask,
                                const LabelRaster& pred_mask,
                                std::int32_t class_id);
WeightedSegCounts weighted_seg_counts(const InstanceRaster& gt,
                                      const LabelRaster& pred_mask,
                                      std::int32_t class_id,
                                      double avg_instance_size);

struct SegClassReport {
  std::int32_t class_id = 0;
  std::optional<double> iou;
  std::optional<double> iiou;           // absent without instance rasters
  std::optional<double> delta_iou_rel;  // absent without a baseline report
};

struct SegEvalReport {
  std::vector<SegClassReport> classes;
};

std::string serialize_seg_report(const SegEvalReport& report);
SegEvalReport parse_seg_report(const std::string& json_text);

// ---------------------------------------------------------------------------
// Embedding distance
// ---------------------------------------------------------------------------

struct EmbeddingDistanceRecord {
  std::string image_path;
  int face_index = 0;
  double l2_distance = 0.0;  // in [0, 2]
};

/// Euclidean distance between the L2-normalized inputs; dimension-agnostic,
/// value in [0, 2]. Zero vectors have no direction and are an error.
double embedding_l2(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::int64_t count = 0;
};

struct Histogram {
  std::vector<HistogramBin> bins;
  std::int64_t overflow = 0;  // values outside [lo, hi]
};

/// Equal-width bins over [lo, hi]; values equal to hi land in the last bin;
/// out-of-range values are tallied in `overflow`. Bin counts plus overflow
/// always add up to the input length.
Histogram histogram(std::span<const double> values, int bins, double lo,
                    double hi);

/// CSV with header "bin_left,bin_right,count", one row per bin, decimal
/// points, newline-terminated.
std::string histogram_csv(const Histogram& hist);

std::string histogram_json(const Histogram& hist);

/// Minimal standalone SVG bar chart of the bin counts.
std::string histogram_svg(const Histogram& hist);

}  // namespace anonypipe
