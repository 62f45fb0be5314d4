// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anonypipe/errors.hpp"

namespace anonypipe {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Detection evaluation
// ---------------------------------------------------------------------------

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

std::optional<double> match_and_ap(std::span<const FaceDetection> gt,
                                   std::span<const FaceDetection> pred,
                                   double iou_threshold) {
  if (iou_threshold <= 0.0 || iou_threshold > 1.0) {
    throw EvaluationError("IoU threshold must be in (0, 1]");
  }
  if (gt.empty()) return std::nullopt;

  std::vector<FaceDetection> gt_sorted(gt.begin(), gt.end());
  std::sort(gt_sorted.begin(), gt_sorted.end(), face_order);
  std::vector<FaceDetection> pred_sorted(pred.begin(), pred.end());
  std::sort(pred_sorted.begin(), pred_sorted.end(), face_order);

  std::vector<bool> gt_taken(gt_sorted.size(), false);
  std::vector<bool> is_tp(pred_sorted.size(), false);
  for (std::size_t p = 0; p < pred_sorted.size(); ++p) {
    double best_iou = 0.0;
    std::size_t best_gt = gt_sorted.size();
    for (std::size_t g = 0; g < gt_sorted.size(); ++g) {
      if (gt_taken[g]) continue;
      const double iou = box_iou(pred_sorted[p].box, gt_sorted[g].box);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best_gt = g;
      }
    }
    if (best_gt < gt_sorted.size()) {
      gt_taken[best_gt] = true;
      is_tp[p] = true;
    }
  }

  const double total_gt = static_cast<double>(gt_sorted.size());
  const std::size_t n = pred_sorted.size();
  std::vector<double> precision(n), recall(n);
  std::int64_t tp_cum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (is_tp[k]) ++tp_cum;
    precision[k] = static_cast<double>(tp_cum) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp_cum) / total_gt;
  }

  // Precision envelope, integrated over all recall steps.
  double envelope = 0.0;
  double ap = 0.0;
  std::vector<double> env(n);
  for (std::size_t k = n; k-- > 0;) {
    envelope = std::max(envelope, precision[k]);
    env[k] = envelope;
  }
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * env[k];
    prev_recall = recall[k];
  }
  return ap;
}

namespace {

// Index of the ground truth with the highest positive IoU against `box`,
// ties going to the earlier entry; nullopt when nothing overlaps.
std::optional<std::size_t> best_overlap_gt(
    const BoundingBox& box, const std::vector<FaceDetection>& gt_sorted) {
  double best_iou = 0.0;
  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < gt_sorted.size(); ++g) {
    const double iou = box_iou(box, gt_sorted[g].box);
    if (iou > best_iou) {
      best_iou = iou;
      best = g;
    }
  }
  return best;
}

double mean_ap_over_thresholds(std::span<const FaceDetection> gt,
                               std::span<const FaceDetection> pred,
                               std::span<const double> thresholds) {
  double sum = 0.0;
  for (const double t : thresholds) {
    const auto ap = match_and_ap(gt, pred, t);
    sum += ap.value_or(0.0);
  }
  return sum / static_cast<double>(thresholds.size());
}

struct BucketAccumulator {
  double sum = 0.0;
  std::int64_t images = 0;

  void add(double v) {
    sum += v;
    ++images;
  }
  std::optional<double> mean() const {
    if (images == 0) return std::nullopt;
    return sum / static_cast<double>(images);
  }
};

}  // namespace

DetEvalReport evaluate_detection(const DetectionManifest& gt,
                                 const DetectionManifest& pred,
                                 std::span<const double> iou_thresholds) {
  if (iou_thresholds.empty()) {
    throw EvaluationError("at least one IoU threshold is required");
  }

  std::map<std::string, const ImageEntry*> gt_by_path;
  for (const ImageEntry& e : gt.entries) gt_by_path[e.image_path] = &e;
  std::map<std::string, const ImageEntry*> pred_by_path;
  for (const ImageEntry& e : pred.entries) pred_by_path[e.image_path] = &e;

  std::string missing;
  for (const auto& [path, entry] : gt_by_path) {
    if (!pred_by_path.count(path)) missing += "\n  pred missing: " + path;
  }
  for (const auto& [path, entry] : pred_by_path) {
    if (!gt_by_path.count(path)) missing += "\n  gt missing: " + path;
  }
  if (!missing.empty()) {
    throw EvaluationError("manifest image sets differ:" + missing);
  }

  const std::vector<std::pair<SizeCategory, int>> buckets = {
      {SizeCategory::kSmall, 0},
      {SizeCategory::kMedium, 1},
      {SizeCategory::kLarge, 2}};

  BucketAccumulator acc_all;
  BucketAccumulator acc_bucket[3];

  for (const auto& [path, gt_entry] : gt_by_path) {
    const ImageEntry& pred_entry = *pred_by_path.at(path);

    std::vector<FaceDetection> gt_sorted = gt_entry->faces;
    std::sort(gt_sorted.begin(), gt_sorted.end(), face_order);

    if (!gt_sorted.empty()) {
      acc_all.add(mean_ap_over_thresholds(gt_sorted, pred_entry.faces,
                                          iou_thresholds));
    }

    for (const auto& [category, slot] : buckets) {
      std::vector<FaceDetection> gt_bucket;
      for (const FaceDetection& f : gt_sorted) {
        if (f.size_category == category) gt_bucket.push_back(f);
      }
      if (gt_bucket.empty()) continue;

      // Cross-bucket predictions are ignored rather than penalized;
      // predictions overlapping no ground truth stay in as false positives.
      std::vector<FaceDetection> pred_kept;
      for (const FaceDetection& p : pred_entry.faces) {
        const auto best = best_overlap_gt(p.box, gt_sorted);
        if (best && gt_sorted[*best].size_category != category) continue;
        pred_kept.push_back(p);
      }
      acc_bucket[slot].add(
          mean_ap_over_thresholds(gt_bucket, pred_kept, iou_thresholds));
    }
  }

  DetEvalReport report;
  report.map_all = acc_all.mean();
  report.map_s = acc_bucket[0].mean();
  report.map_m = acc_bucket[1].mean();
  report.map_l = acc_bucket[2].mean();
  report.noa = count_noa(pred);
  return report;
}

DetEvalReport evaluate_detection(const DetectionManifest& gt,
                                 const DetectionManifest& pred) {
  const auto thresholds = coco_iou_thresholds();
  return evaluate_detection(gt, pred, thresholds);
}

std::string serialize_det_report(const DetEvalReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  const auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("map", report.map_all);
  put("map_s", report.map_s);
  put("map_m", report.map_m);
  put("map_l", report.map_l);
  j["noa"] = report.noa;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Segmentation metrics
// ---------------------------------------------------------------------------

LabelRaster LabelRaster::filled(int w, int h, std::int32_t value) {
  LabelRaster r;
  r.width = w;
  r.height = h;
  r.ids.assign(static_cast<std::size_t>(w) * h, value);
  return r;
}

namespace {

void require_same_dims(const LabelRaster& a, const LabelRaster& b,
                       const char* op) {
  if (a.width != b.width || a.height != b.height) {
    throw EvaluationError(std::string(op) + ": raster dimensions differ");
  }
}

// Pixel counts per instance id, restricted to the queried class.
std::map<std::int32_t, std::int64_t> instance_sizes(const InstanceRaster& gt,
                                                    std::int32_t class_id) {
  require_same_dims(gt.classes, gt.instances, "instance raster");
  std::map<std::int32_t, std::int64_t> sizes;
  for (std::size_t i = 0; i < gt.classes.ids.size(); ++i) {
    if (gt.classes.ids[i] != class_id) continue;
    const std::int32_t inst = gt.instances.ids[i];
    if (inst <= 0) {
      throw EvaluationError(
          "ground-truth pixel of class " + std::to_string(class_id) +
          " has no instance assigned (instance id " + std::to_string(inst) +
          ")");
    }
    ++sizes[inst];
  }
  return sizes;
}

}  // namespace

SegPixelCounts seg_pixel_counts(const LabelRaster& gt_mask,
                                const LabelRaster& pred_mask,
                                std::int32_t class_id) {
  require_same_dims(gt_mask, pred_mask, "seg_pixel_counts");
  SegPixelCounts counts;
  for (std::size_t i = 0; i < gt_mask.ids.size(); ++i) {
    const bool in_gt = gt_mask.ids[i] == class_id;
    const bool in_pred = pred_mask.ids[i] == class_id;
    if (in_gt && in_pred) {
      ++counts.tp;
    } else if (in_pred) {
      ++counts.fp;
    } else if (in_gt) {
      ++counts.fn;
    }
  }
  return counts;
}

std::optional<double> compute_iou(const LabelRaster& gt_mask,
                                  const LabelRaster& pred_mask,
                                  std::int32_t class_id) {
  const SegPixelCounts c = seg_pixel_counts(gt_mask, pred_mask, class_id);
  const std::int64_t denom = c.tp + c.fp + c.fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

WeightedSegCounts weighted_seg_counts(const InstanceRaster& gt,
                                      const LabelRaster& pred_mask,
                                      std::int32_t class_id,
                                      double avg_instance_size) {
  require_same_dims(gt.classes, pred_mask, "weighted_seg_counts");
  if (avg_instance_size <= 0.0) {
    throw EvaluationError("average instance size must be positive");
  }
  const auto sizes = instance_sizes(gt, class_id);

  WeightedSegCounts counts;
  for (std::size_t i = 0; i < gt.classes.ids.size(); ++i) {
    const bool in_gt = gt.classes.ids[i] == class_id;
    const bool in_pred = pred_mask.ids[i] == class_id;
    if (in_gt) {
      const double weight =
          avg_instance_size /
          static_cast<double>(sizes.at(gt.instances.ids[i]));
      if (in_pred) {
        counts.itp += weight;
      } else {
        counts.ifn += weight;
      }
    } else if (in_pred) {
      ++counts.fp;
    }
  }
  return counts;
}

double compute_iiou(const InstanceRaster& gt, const LabelRaster& pred_mask,
                    std::int32_t class_id, double avg_instance_size) {
  const WeightedSegCounts c =
      weighted_seg_counts(gt, pred_mask, class_id, avg_instance_size);
  const double denom = c.itp + static_cast<double>(c.fp) + c.ifn;
  if (denom == 0.0) {
    throw EvaluationError("iIoU undefined: class " +
                          std::to_string(class_id) +
                          " absent from ground truth and prediction");
  }
  return c.itp / denom;
}

double compute_avg_instance_size(std::span<const InstanceRaster> gt_dataset,
                                 std::int32_t class_id) {
  std::int64_t total_pixels = 0;
  std::int64_t total_instances = 0;
  for (const InstanceRaster& raster : gt_dataset) {
    for (const auto& [inst, pixels] : instance_sizes(raster, class_id)) {
      total_pixels += pixels;
      ++total_instances;
    }
  }
  if (total_instances == 0) {
    throw EvaluationError("class " + std::to_string(class_id) +
                          " has no instances in the ground-truth dataset");
  }
  return static_cast<double>(total_pixels) /
         static_cast<double>(total_instances);
}

double delta_iou_rel(double iou_anon, double iou_base) {
  if (iou_base <= 0.0) {
    throw EvaluationError("delta_iou_rel undefined for baseline IoU <= 0");
  }
  return (iou_anon - iou_base) / iou_base;
}

std::string serialize_seg_report(const SegEvalReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["classes"] = nlohmann::ordered_json::array();
  for (const SegClassReport& c : report.classes) {
    nlohmann::ordered_json jc;
    jc["class_id"] = c.class_id;
    jc["iou"] = c.iou ? nlohmann::ordered_json(*c.iou)
                      : nlohmann::ordered_json(nullptr);
    jc["iiou"] = c.iiou ? nlohmann::ordered_json(*c.iiou)
                        : nlohmann::ordered_json(nullptr);
    jc["delta_iou_rel"] = c.delta_iou_rel
                              ? nlohmann::ordered_json(*c.delta_iou_rel)
                              : nlohmann::ordered_json(nullptr);
    j["classes"].push_back(jc);
  }
  return j.dump(2) + "\n";
}

SegEvalReport parse_seg_report(const std::string& json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw EvaluationError(std::string("segmentation report is not valid "
                                      "JSON: ") +
                          e.what());
  }
  SegEvalReport report;
  try {
    if (root.at("schema_version").get<int>() != 1) {
      throw EvaluationError("unsupported segmentation report schema");
    }
    for (const auto& jc : root.at("classes")) {
      SegClassReport c;
      c.class_id = jc.at("class_id").get<std::int32_t>();
      if (!jc.at("iou").is_null()) c.iou = jc.at("iou").get<double>();
      if (!jc.at("iiou").is_null()) c.iiou = jc.at("iiou").get<double>();
      if (jc.contains("delta_iou_rel") && !jc.at("delta_iou_rel").is_null()) {
        c.delta_iou_rel = jc.at("delta_iou_rel").get<double>();
      }
      report.classes.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw EvaluationError(std::string("malformed segmentation report: ") +
                          e.what());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Embedding distance
// ---------------------------------------------------------------------------

double embedding_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw EvaluationError("embedding dimensions differ");
  }
  if (a.empty()) {
    throw EvaluationError("empty embedding vectors");
  }
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  norm_a = std::sqrt(norm_a);
  norm_b = std::sqrt(norm_b);
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw EvaluationError("zero embedding vector has no direction");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] / norm_a - b[i] / norm_b;
    sum += d * d;
  }
  // Mathematically <= 2; clamp away round-off spill.
  return std::min(std::sqrt(sum), 2.0);
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

Histogram histogram(std::span<const double> values, int bins, double lo,
                    double hi) {
  if (bins < 1) {
    throw EvaluationError("histogram needs at least one bin");
  }
  if (!(lo < hi)) {
    throw EvaluationError("histogram range must satisfy lo < hi");
  }
  Histogram hist;
  hist.bins.resize(bins);
  // Interpolated edges: first edge is exactly lo, last exactly hi.
  const auto edge = [&](int i) {
    return (lo * (bins - i) + hi * i) / bins;
  };
  for (int i = 0; i < bins; ++i) {
    hist.bins[i].left = edge(i);
    hist.bins[i].right = edge(i + 1);
  }
  for (const double v : values) {
    if (v < lo || v > hi || std::isnan(v)) {
      ++hist.overflow;
      continue;
    }
    int idx = static_cast<int>((v - lo) / (hi - lo) * bins);
    idx = std::clamp(idx, 0, bins - 1);  // v == hi lands in the last bin
    ++hist.bins[idx].count;
  }
  return hist;
}

std::string histogram_csv(const Histogram& hist) {
  std::ostringstream out;
  out << "bin_left,bin_right,count\n";
  for (const HistogramBin& bin : hist.bins) {
    out << format_double(bin.left) << ',' << format_double(bin.right) << ','
        << bin.count << '\n';
  }
  return out.str();
}

std::string histogram_json(const Histogram& hist) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["bins"] = nlohmann::ordered_json::array();
  for (const HistogramBin& bin : hist.bins) {
    j["bins"].push_back({{"bin_left", bin.left},
                         {"bin_right", bin.right},
                         {"count", bin.count}});
  }
  j["overflow"] = hist.overflow;
  return j.dump(2) + "\n";
}

std::string histogram_svg(const Histogram& hist) {
  constexpr int kWidth = 640;
  constexpr int kHeight = 400;
  constexpr int kMarginLeft = 56;
  constexpr int kMarginBottom = 40;
  constexpr int kMarginTop = 16;
  constexpr int kMarginRight = 16;
  const int plot_w = kWidth - kMarginLeft - kMarginRight;
  const int plot_h = kHeight - kMarginTop - kMarginBottom;

  std::int64_t max_count = 1;
  for (const HistogramBin& bin : hist.bins) {
    max_count = std::max(max_count, bin.count);
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  out << "  <rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";

  const std::size_t n = hist.bins.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double frac =
        static_cast<double>(hist.bins[i].count) / static_cast<double>(
            max_count);
    const double bar_h = frac * plot_h;
    const double x = kMarginLeft + static_cast<double>(i) * plot_w / n;
    const double w = static_cast<double>(plot_w) / n;
    out << "  <rect x=\"" << format_double(x) << "\" y=\""
        << format_double(kMarginTop + plot_h - bar_h) << "\" width=\""
        << format_double(std::max(w - 1.0, 1.0)) << "\" height=\""
        << format_double(bar_h) << "\" fill=\"#4878a8\"/>\n";
  }

  // Axes and corner labels.
  out << "  <line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop
      << "\" x2=\"" << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\""
      << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
  if (!hist.bins.empty()) {
    out << "  <text x=\"" << kMarginLeft << "\" y=\"" << kHeight - 12
        << "\" font-size=\"12\">" << format_double(hist.bins.front().left)
        << "</text>\n";
    out << "  <text x=\"" << kMarginLeft + plot_w - 24 << "\" y=\""
        << kHeight - 12 << "\" font-size=\"12\">"
        << format_double(hist.bins.back().right) << "</text>\n";
  }
  out << "  <text x=\"8\" y=\"" << kMarginTop + 12 << "\" font-size=\"12\">"
      << max_count << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace anonypipe
