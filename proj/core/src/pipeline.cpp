// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "anonypipe/errors.hpp"
#include "anonypipe/image_io.hpp"
#include "anonypipe/version.hpp"

namespace anonypipe {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigError("input directory '" + dir.string() +
                      "' does not exist");
  }
  std::vector<fs::path> rel;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!has_image_extension(entry.path())) continue;
    rel.push_back(fs::relative(entry.path(), dir));
  }
  std::sort(rel.begin(), rel.end());
  return rel;
}

std::string path_key(const fs::path& rel) {
  return rel.generic_string();
}

/// Serializes calls into a backend that did not declare itself safe for
/// concurrent invocation.
class LockedInpainter : public InpaintBackend {
 public:
  LockedInpainter(InpaintBackend& inner, std::mutex& mutex)
      : inner_(inner), mutex_(mutex) {}
  InpainterCapability capability() const override {
    return inner_.capability();
  }
  ImageBuffer inpaint(const ImageBuffer& patch, const MaskBuffer& mask,
                      const InpaintRequest& request) override {
    std::scoped_lock lock(mutex_);
    return inner_.inpaint(patch, mask, request);
  }

 private:
  InpaintBackend& inner_;
  std::mutex& mutex_;
};

class LockedDetector : public DetectorBackend {
 public:
  LockedDetector(DetectorBackend& inner, std::mutex& mutex)
      : inner_(inner), mutex_(mutex) {}
  DetectorCapability capability() const override {
    return inner_.capability();
  }
  std::vector<FaceDetection> detect(const ImageBuffer& img,
                                    const std::string& image_id) override {
    std::scoped_lock lock(mutex_);
    return inner_.detect(img, image_id);
  }

 private:
  DetectorBackend& inner_;
  std::mutex& mutex_;
};

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << text;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  return quoted + "\"";
}

std::string format_double_text(double v) {
  return json(v).dump();
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "gauss") return Method::kGauss;
  if (name == "crop") return Method::kCrop;
  if (name == "pixel") return Method::kPixel;
  if (name == "ldfa") return Method::kLdfa;
  throw ConfigError("unknown anonymization method '" + name +
                    "' (expected gauss, crop, pixel or ldfa)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kGauss:
      return "gauss";
    case Method::kCrop:
      return "crop";
    case Method::kPixel:
      return "pixel";
    case Method::kLdfa:
      return "ldfa";
  }
  throw Error("method_name: unreachable");
}

void validate_config(const RunConfig& config) {
  if (config.threshold < 0.0 || config.threshold > 1.0) {
    throw ConfigError("threshold must be in [0, 1], got " +
                      std::to_string(config.threshold));
  }
  if (config.jobs < 1) {
    throw ConfigError("jobs must be >= 1");
  }
  if (config.output_format != "png" && config.output_format != "jpeg") {
    throw ConfigError("output format must be 'png' or 'jpeg'");
  }
  if (config.jpeg_quality < 1 || config.jpeg_quality > 100) {
    throw ConfigError("jpeg quality must be in [1, 100]");
  }
  switch (config.method) {
    case Method::kGauss:
      if (config.gauss.sigma <= 0.0) {
        throw ConfigError("gauss.sigma must be > 0");
      }
      if (config.gauss.kernel_radius < 0) {
        throw ConfigError("gauss.kernel_radius must be >= 0");
      }
      break;
    case Method::kPixel:
      if (config.pixel.patch_size < 1) {
        throw ConfigError("pixel.patch_size must be >= 1");
      }
      break;
    case Method::kLdfa:
      if (config.ldfa.context_pad < 0) {
        throw ConfigError("ldfa.context_pad must be >= 0");
      }
      if (config.ldfa.model_resolution < 64) {
        throw ConfigError("ldfa.model_resolution must be >= 64");
      }
      if (config.ldfa.inference_steps < 1) {
        throw ConfigError("ldfa.inference_steps must be >= 1");
      }
      break;
    case Method::kCrop:
      break;
  }
  if (config.backends.embed_dim < 2) {
    throw ConfigError("stub.embed_dim must be >= 2");
  }
}

std::string image_status_name(ImageStatus status) {
  switch (status) {
    case ImageStatus::kOk:
      return "ok";
    case ImageStatus::kPartial:
      return "partial";
    case ImageStatus::kFailed:
      return "failed";
  }
  throw Error("image_status_name: unreachable");
}

bool RunManifest::all_ok() const {
  return std::all_of(images.begin(), images.end(),
                     [](const ImageRunRecord& r) {
                       return r.status == ImageStatus::kOk;
                     });
}

namespace {

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["method"] = method_name(c.method);
  j["threshold"] = c.threshold;
  j["base_seed"] = c.base_seed;
  j["input_dir"] = c.input_dir.string();
  j["output_dir"] = c.output_dir.string();
  j["jobs"] = c.jobs;
  j["output_format"] = c.output_format;
  j["jpeg_quality"] = c.jpeg_quality;
  j["gauss"] = {{"sigma", c.gauss.sigma},
                {"kernel_radius", c.gauss.kernel_radius}};
  j["pixel"] = {{"patch_size", c.pixel.patch_size}};
  j["ldfa"] = {{"context_pad", c.ldfa.context_pad},
               {"model_resolution", c.ldfa.model_resolution},
               {"prompt", c.ldfa.prompt},
               {"cfg_scale", c.ldfa.cfg_scale},
               {"sampler_id", c.ldfa.sampler_id},
               {"inference_steps", c.ldfa.inference_steps}};
  j["detector"] = {{"backend", c.detector_backend}};
  j["inpainter"] = {{"backend", c.inpainter_backend}};
  j["embedder"] = {{"backend", c.embedder_backend}};
  j["stub"] = {{"sidecar_path", c.backends.sidecar_path.string()},
               {"identity", c.backends.identity},
               {"fail_seeds", c.backends.fail_seeds},
               {"embed_dim", c.backends.embed_dim}};
  j["backend_dir"] = c.backends.backend_dir.string();
  return j;
}

}  // namespace

std::string serialize_run_manifest(const RunManifest& manifest) {
  ordered_json j;
  j["schema_version"] = 1;
  j["toolkit_version"] = manifest.toolkit_version;
  j["config"] = config_json(manifest.config);

  ordered_json backends;
  if (manifest.detector) {
    backends["detector"] = {
        {"name", manifest.detector->name},
        {"version", manifest.detector->version},
        {"safe_for_concurrent_calls",
         manifest.detector->safe_for_concurrent_calls}};
  } else {
    backends["detector"] = nullptr;
  }
  if (manifest.inpainter) {
    backends["inpainter"] = {
        {"name", manifest.inpainter->name},
        {"version", manifest.inpainter->version},
        {"native_resolution", manifest.inpainter->native_resolution},
        {"safe_for_concurrent_calls",
         manifest.inpainter->safe_for_concurrent_calls},
        {"deterministic", manifest.inpainter->deterministic}};
    if (!manifest.inpainter->deterministic) {
      backends["inpainter"]["reproducible"] = false;
    }
  } else {
    backends["inpainter"] = nullptr;
  }
  j["backends"] = backends;

  j["images"] = ordered_json::array();
  for (const ImageRunRecord& r : manifest.images) {
    ordered_json ji;
    ji["image_path"] = r.image_path;
    ji["output_path"] = r.output_path;
    ji["status"] = image_status_name(r.status);
    ji["errors"] = r.errors;
    ji["timings_ms"] = {{"total", r.wall_ms}};
    j["images"].push_back(ji);
  }

  j["detections"] = ordered_json::parse(serialize_manifest(
      manifest.processed));
  j["total_detected"] = manifest.total_detected;
  j["noa"] = manifest.noa;
  j["timings_ms"] = {{"total", manifest.wall_ms}};
  return j.dump(2) + "\n";
}

std::string canonical_run_manifest_json(const std::string& manifest_json) {
  ordered_json j;
  try {
    j = ordered_json::parse(manifest_json);
  } catch (const json::exception& e) {
    throw ManifestError(std::string("run manifest is not valid JSON: ") +
                        e.what());
  }
  const std::function<void(ordered_json&)> strip = [&](ordered_json& node) {
    if (node.is_object()) {
      node.erase("timings_ms");
      for (auto& [key, value] : node.items()) strip(value);
    } else if (node.is_array()) {
      for (auto& value : node) strip(value);
    }
  };
  strip(j);
  return j.dump(2) + "\n";
}

namespace {

struct PerImageResult {
  ImageRunRecord record;
  std::optional<ImageEntry> processed;  // absent when the image was unreadable
  std::int64_t detected = 0;
};

PerImageResult process_one_image(const RunConfig& config,
                                 const fs::path& rel,
                                 DetectorBackend& detector,
                                 InpaintBackend* inpainter) {
  const auto start = std::chrono::steady_clock::now();
  PerImageResult result;
  result.record.image_path = path_key(rel);

  fs::path out_rel = rel;
  out_rel.replace_extension(config.output_format == "jpeg" ? ".jpg" : ".png");

  ImageBuffer img;
  try {
    img = read_image(config.input_dir / rel);
  } catch (const std::exception& e) {
    result.record.status = ImageStatus::kFailed;
    result.record.errors.push_back(e.what());
    result.record.wall_ms = elapsed_ms(start);
    return result;
  }

  ImageEntry entry;
  entry.image_path = result.record.image_path;
  entry.image_w = img.width();
  entry.image_h = img.height();

  try {
    std::vector<FaceDetection> faces =
        detect_faces(img, detector, result.record.image_path,
                     config.threshold);
    result.detected = static_cast<std::int64_t>(faces.size());

    if (config.method == Method::kLdfa) {
      LdfaConfig ldfa = config.ldfa;
      ldfa.base_seed = config.base_seed;
      LdfaResult ldfa_result = anonymize_ldfa(img, faces, ldfa, *inpainter);
      img = std::move(ldfa_result.image);
      for (const FaceOutcome& outcome : ldfa_result.faces) {
        if (outcome.status == FaceStatus::kOk) {
          entry.faces.push_back(outcome.face);
        } else {
          result.record.errors.push_back(
              "face at [" + std::to_string(outcome.face.box.x0) + "," +
              std::to_string(outcome.face.box.y0) + "]: " + outcome.error);
        }
      }
      result.record.status = ldfa_result.complete ? ImageStatus::kOk
                                                  : ImageStatus::kPartial;
    } else {
      for (const FaceDetection& face : faces) {
        switch (config.method) {
          case Method::kGauss:
            anonymize_gauss(img, face.box, config.gauss);
            break;
          case Method::kCrop:
            anonymize_crop(img, face.box);
            break;
          case Method::kPixel:
            anonymize_pixel(img, face.box, config.pixel);
            break;
          case Method::kLdfa:
            break;
        }
        entry.faces.push_back(face);
      }
      result.record.status = ImageStatus::kOk;
    }

    const fs::path out_abs = config.output_dir / out_rel;
    fs::create_directories(out_abs.parent_path());
    if (config.output_format == "jpeg") {
      write_jpeg(img, out_abs, config.jpeg_quality);
    } else {
      write_png(img, out_abs);
    }
    result.record.output_path = path_key(out_rel);
  } catch (const std::exception& e) {
    result.record.status = ImageStatus::kFailed;
    result.record.errors.push_back(e.what());
    result.record.wall_ms = elapsed_ms(start);
    // Nothing was written, so no face counts as anonymized.
    entry.faces.clear();
    result.processed = std::move(entry);
    return result;
  }

  result.processed = std::move(entry);
  result.record.wall_ms = elapsed_ms(start);
  return result;
}

void resolve_default_backends(const RunConfig& config, BackendSet& backends,
                              bool need_inpainter, bool need_embedder) {
  if (!backends.detector) {
    backends.detector =
        resolve_detector(config.detector_backend, config.backends);
  }
  if (need_inpainter && !backends.inpainter) {
    backends.inpainter =
        resolve_inpainter(config.inpainter_backend, config.backends);
  }
  if (need_embedder && !backends.embedder) {
    backends.embedder =
        resolve_embedder(config.embedder_backend, config.backends);
  }
}

}  // namespace

int run_anonymize(const RunConfig& config, BackendSet backends) {
  const auto start = std::chrono::steady_clock::now();
  validate_config(config);
  if (config.output_dir.empty()) {
    throw ConfigError("output directory is required");
  }

  const bool need_inpainter = config.method == Method::kLdfa;
  resolve_default_backends(config, backends, need_inpainter, false);
  fs::create_directories(config.output_dir);

  const std::vector<fs::path> images = list_images(config.input_dir);

  std::mutex detector_mutex;
  std::mutex inpainter_mutex;
  LockedDetector locked_detector(*backends.detector, detector_mutex);
  DetectorBackend& detector =
      backends.detector->capability().safe_for_concurrent_calls
          ? *backends.detector
          : static_cast<DetectorBackend&>(locked_detector);

  InpaintBackend* inpainter = nullptr;
  std::optional<LockedInpainter> locked_inpainter;
  if (need_inpainter) {
    if (backends.inpainter->capability().safe_for_concurrent_calls) {
      inpainter = backends.inpainter.get();
    } else {
      locked_inpainter.emplace(*backends.inpainter, inpainter_mutex);
      inpainter = &*locked_inpainter;
    }
  }

  std::vector<PerImageResult> results(images.size());
  std::atomic<std::size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(config.jobs,
                                static_cast<int>(images.size())));
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= images.size()) break;
      results[i] = process_one_image(config, images[i], detector, inpainter);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  RunManifest manifest;
  manifest.config = config;
  manifest.toolkit_version = kToolkitVersion;
  manifest.detector = backends.detector->capability();
  if (need_inpainter) {
    manifest.inpainter = backends.inpainter->capability();
  }
  for (PerImageResult& r : results) {
    manifest.total_detected += r.detected;
    if (r.processed) {
      manifest.noa += static_cast<std::int64_t>(r.processed->faces.size());
      manifest.processed.entries.push_back(std::move(*r.processed));
    }
    manifest.images.push_back(std::move(r.record));
  }
  std::sort(manifest.images.begin(), manifest.images.end(),
            [](const ImageRunRecord& a, const ImageRunRecord& b) {
              return a.image_path < b.image_path;
            });
  manifest.wall_ms = elapsed_ms(start);

  write_text_file(config.output_dir / "run_manifest.json",
                  serialize_run_manifest(manifest));
  return manifest.all_ok() ? 0 : 1;
}

int run_detect(const RunConfig& config, const fs::path& out_path,
               BackendSet backends) {
  validate_config(config);
  resolve_default_backends(config, backends, false, false);

  DetectionManifest manifest;
  for (const fs::path& rel : list_images(config.input_dir)) {
    const ImageBuffer img = read_image(config.input_dir / rel);
    ImageEntry entry;
    entry.image_path = path_key(rel);
    entry.image_w = img.width();
    entry.image_h = img.height();
    entry.faces = detect_faces(img, *backends.detector, entry.image_path,
                               config.threshold);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out_path);
  return 0;
}

int run_eval_det(const fs::path& gt_path, const fs::path& pred_path,
                 const fs::path& out_path,
                 std::vector<double> iou_thresholds) {
  const DetectionManifest gt = load_manifest(gt_path);
  const DetectionManifest pred = load_manifest(pred_path);
  if (iou_thresholds.empty()) iou_thresholds = coco_iou_thresholds();
  const DetEvalReport report = evaluate_detection(gt, pred, iou_thresholds);
  write_text_file(out_path, serialize_det_report(report));
  return 0;
}

int run_eval_embed(const fs::path& orig_dir, const fs::path& anon_dir,
                   const fs::path& manifest_path, const fs::path& out_csv,
                   const RunConfig& config, const EmbedEvalOptions& options,
                   BackendSet backends) {
  resolve_default_backends(config, backends, false, true);
  EmbedBackend& embedder = *backends.embedder;

  DetectionManifest manifest = load_manifest(manifest_path);
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ImageEntry& a, const ImageEntry& b) {
              return a.image_path < b.image_path;
            });

  std::vector<EmbeddingDistanceRecord> records;
  std::vector<double> distances;
  for (const ImageEntry& entry : manifest.entries) {
    const fs::path orig_path = orig_dir / entry.image_path;
    fs::path anon_path = anon_dir / entry.image_path;
    if (!fs::exists(anon_path)) {
      // Anonymized trees are PNG by default even for JPEG inputs.
      fs::path repathed = anon_path;
      repathed.replace_extension(".png");
      if (!fs::exists(repathed)) {
        throw EvaluationError("missing anonymized counterpart for '" +
                              entry.image_path + "'");
      }
      anon_path = repathed;
    }
    const ImageBuffer orig = read_image(orig_path);
    const ImageBuffer anon = read_image(anon_path);
    if (orig.width() != anon.width() || orig.height() != anon.height()) {
      throw EvaluationError("dimension mismatch between original and "
                            "anonymized '" + entry.image_path + "'");
    }
    for (std::size_t i = 0; i < entry.faces.size(); ++i) {
      const BoundingBox& box = entry.faces[i].box;
      const std::vector<double> e_orig = embedder.embed(crop(orig, box));
      const std::vector<double> e_anon = embedder.embed(crop(anon, box));
      EmbeddingDistanceRecord record;
      record.image_path = entry.image_path;
      record.face_index = static_cast<int>(i);
      record.l2_distance = embedding_l2(e_orig, e_anon);
      distances.push_back(record.l2_distance);
      records.push_back(std::move(record));
    }
  }

  std::ostringstream csv;
  csv << "image_path,face_index,l2_distance\n";
  for (const EmbeddingDistanceRecord& r : records) {
    csv << csv_field(r.image_path) << ',' << r.face_index << ','
        << format_double_text(r.l2_distance) << '\n';
  }
  write_text_file(out_csv, csv.str());

  const Histogram hist =
      histogram(distances, options.bins, options.lo, options.hi);
  fs::path hist_path = out_csv;
  hist_path.replace_extension(".hist.csv");
  write_text_file(hist_path, histogram_csv(hist));
  if (!options.svg_path.empty()) {
    write_text_file(options.svg_path, histogram_svg(hist));
  }
  return 0;
}

LabelRaster class_raster_from_image(const ImageBuffer& img) {
  LabelRaster raster = LabelRaster::filled(img.width(), img.height(), 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      raster.set(x, y, img.at(x, y, 0));
    }
  }
  return raster;
}

LabelRaster instance_raster_from_image(const ImageBuffer& img) {
  LabelRaster raster = LabelRaster::filled(img.width(), img.height(), 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::int32_t id = static_cast<std::int32_t>(img.at(x, y, 0)) +
                              256 * static_cast<std::int32_t>(
                                        img.at(x, y, 1)) +
                              65536 * static_cast<std::int32_t>(
                                          img.at(x, y, 2));
      raster.set(x, y, id);
    }
  }
  return raster;
}

int run_eval_seg(const fs::path& gt_dir, const fs::path& pred_dir,
                 const std::vector<std::int32_t>& classes,
                 const fs::path& out_path, const fs::path& baseline_path) {
  if (classes.empty()) {
    throw ConfigError("eval-seg requires at least one class id");
  }
  if (!fs::is_directory(gt_dir)) {
    throw EvaluationError("ground-truth directory '" + gt_dir.string() +
                          "' does not exist");
  }
  if (!fs::is_directory(pred_dir)) {
    throw EvaluationError("prediction directory '" + pred_dir.string() +
                          "' does not exist");
  }

  // Ground truth drives the pairing; <stem>.inst.png rasters are the
  // optional instance layer.
  std::vector<fs::path> gt_files;
  for (const auto& entry : fs::recursive_directory_iterator(gt_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), gt_dir);
    const std::string name = rel.filename().string();
    if (name.size() > 9 &&
        name.substr(name.size() - 9) == ".inst.png") {
      continue;
    }
    if (!has_image_extension(rel)) continue;
    gt_files.push_back(rel);
  }
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) {
    throw EvaluationError("no ground-truth rasters under '" +
                          gt_dir.string() + "'");
  }

  struct ClassTotals {
    SegPixelCounts pixels;
    WeightedSegCounts weighted;
  };
  std::map<std::int32_t, ClassTotals> totals;
  for (const std::int32_t c : classes) totals[c] = ClassTotals{};

  std::vector<InstanceRaster> gt_instances;
  std::vector<LabelRaster> gt_masks;
  std::vector<LabelRaster> pred_masks;
  bool instances_available = true;

  for (const fs::path& rel : gt_files) {
    const fs::path pred_path = pred_dir / rel;
    if (!fs::exists(pred_path)) {
      throw EvaluationError("prediction raster missing for '" +
                            path_key(rel) + "'");
    }
    const LabelRaster gt_mask =
        class_raster_from_image(read_image(gt_dir / rel));
    const LabelRaster pred_mask =
        class_raster_from_image(read_image(pred_path));
    if (gt_mask.width != pred_mask.width ||
        gt_mask.height != pred_mask.height) {
      throw EvaluationError("raster dimensions differ for '" +
                            path_key(rel) + "'");
    }

    fs::path inst_path = gt_dir / rel;
    inst_path.replace_extension(".inst.png");
    if (fs::exists(inst_path)) {
      InstanceRaster inst;
      inst.classes = gt_mask;
      inst.instances = instance_raster_from_image(read_image(inst_path));
      if (inst.instances.width != gt_mask.width ||
          inst.instances.height != gt_mask.height) {
        throw EvaluationError("instance raster dimensions differ for '" +
                              path_key(rel) + "'");
      }
      gt_instances.push_back(std::move(inst));
    } else {
      instances_available = false;
    }
    gt_masks.push_back(std::move(gt_mask));
    pred_masks.push_back(std::move(pred_mask));
  }
  // iIoU needs instance weights for the entire dataset, not a subset.
  if (gt_instances.size() != gt_files.size()) instances_available = false;

  for (std::size_t i = 0; i < gt_masks.size(); ++i) {
    for (const std::int32_t c : classes) {
      const SegPixelCounts counts =
          seg_pixel_counts(gt_masks[i], pred_masks[i], c);
      totals[c].pixels.tp += counts.tp;
      totals[c].pixels.fp += counts.fp;
      totals[c].pixels.fn += counts.fn;
    }
  }

  std::map<std::int32_t, double> avg_sizes;
  if (instances_available) {
    for (const std::int32_t c : classes) {
      try {
        avg_sizes[c] = compute_avg_instance_size(gt_instances, c);
      } catch (const EvaluationError&) {
        // class absent from the dataset; iIoU stays undefined
      }
    }
    for (std::size_t i = 0; i < gt_instances.size(); ++i) {
      for (const std::int32_t c : classes) {
        if (!avg_sizes.count(c)) continue;
        const WeightedSegCounts counts = weighted_seg_counts(
            gt_instances[i], pred_masks[i], c, avg_sizes.at(c));
        totals[c].weighted.itp += counts.itp;
        totals[c].weighted.fp += counts.fp;
        totals[c].weighted.ifn += counts.ifn;
      }
    }
  }

  std::optional<SegEvalReport> baseline;
  if (!baseline_path.empty()) {
    baseline = parse_seg_report(read_text_file(baseline_path));
  }

  SegEvalReport report;
  for (const std::int32_t c : classes) {
    SegClassReport cr;
    cr.class_id = c;
    const SegPixelCounts& p = totals[c].pixels;
    if (p.tp + p.fp + p.fn > 0) {
      cr.iou = static_cast<double>(p.tp) /
               static_cast<double>(p.tp + p.fp + p.fn);
    }
    if (instances_available && avg_sizes.count(c)) {
      const WeightedSegCounts& w = totals[c].weighted;
      const double denom = w.itp + static_cast<double>(w.fp) + w.ifn;
      if (denom > 0.0) cr.iiou = w.itp / denom;
    }
    if (baseline && cr.iou) {
      for (const SegClassReport& bc : baseline->classes) {
        if (bc.class_id == c && bc.iou) {
          cr.delta_iou_rel = delta_iou_rel(*cr.iou, *bc.iou);
        }
      }
    }
    report.classes.push_back(cr);
  }

  write_text_file(out_path, serialize_seg_report(report));
  return 0;
}

namespace {

std::vector<std::string> parse_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

int run_histogram(const fs::path& in_csv, const fs::path& out_csv,
                  const HistogramOptions& options) {
  std::ifstream in(in_csv, std::ios::binary);
  if (!in) {
    throw EvaluationError("cannot open '" + in_csv.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw EvaluationError("'" + in_csv.string() + "' is empty");
  }
  const std::vector<std::string> header = parse_csv_row(line);
  std::size_t column = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == options.column) column = i;
  }
  if (column == header.size()) {
    throw EvaluationError("column '" + options.column + "' not found in '" +
                          in_csv.string() + "'");
  }

  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = parse_csv_row(line);
    if (column >= fields.size()) {
      throw EvaluationError("row " + std::to_string(line_no) + " of '" +
                            in_csv.string() + "' has too few fields");
    }
    try {
      values.push_back(std::stod(fields[column]));
    } catch (const std::exception&) {
      throw EvaluationError("row " + std::to_string(line_no) + " of '" +
                            in_csv.string() + "': '" + fields[column] +
                            "' is not a number");
    }
  }

  const Histogram hist =
      histogram(values, options.bins, options.lo, options.hi);
  write_text_file(out_csv, histogram_csv(hist));
  if (!options.svg_path.empty()) {
    write_text_file(options.svg_path, histogram_svg(hist));
  }
  if (!options.json_path.empty()) {
    write_text_file(options.json_path, histogram_json(hist));
  }
  return 0;
}

}  // namespace anonypipe
