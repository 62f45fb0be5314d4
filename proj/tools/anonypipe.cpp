// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0
//
// anonypipe — batch face anonymization and evaluation over image trees.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anonypipe/errors.hpp"
#include "anonypipe/pipeline.hpp"
#include "anonypipe/version.hpp"

namespace {

using anonypipe::RunConfig;

// Folds nested TOML sections below the subcommand level into dotted option
// names, so `[anonymize.stub] sidecar_path = ...` reaches
// `--stub.sidecar_path` on the `anonymize` subcommand.
class SectionedToml : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input)
      const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    for (CLI::ConfigItem& item : items) {
      if (item.parents.size() > 1) {
        std::string name;
        for (std::size_t i = 1; i < item.parents.size(); ++i) {
          name += item.parents[i] + ".";
        }
        item.name = name + item.name;
        item.parents.resize(1);
      }
    }
    return items;
  }
};

struct MethodFlags {
  std::string method = "ldfa";
};

void add_backend_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--detector.backend", config.detector_backend,
                  "Face detector backend name ('stub' or a plugin)")
      ->capture_default_str();
  cmd->add_option("--inpainter.backend", config.inpainter_backend,
                  "Inpainting backend name ('stub' or a plugin)")
      ->capture_default_str();
  cmd->add_option("--embedder.backend", config.embedder_backend,
                  "Embedding backend name ('stub' or a plugin)")
      ->capture_default_str();
  cmd->add_option("--backend-dir", config.backends.backend_dir,
                  "Plugin directory (overrides ANONYPIPE_BACKEND_DIR)");
  cmd->add_option("--stub.sidecar_path", config.backends.sidecar_path,
                  "Detection manifest the stub detector replays");
  cmd->add_flag("--stub.identity", config.backends.identity,
                "Stub inpainter returns its input unchanged");
  cmd->add_option("--stub.fail_seeds", config.backends.fail_seeds,
                  "Seeds for which the stub inpainter reports failure")
      ->delimiter(',');
  cmd->add_option("--stub.embed_dim", config.backends.embed_dim,
                  "Stub embedder dimensionality")
      ->capture_default_str();
}

void finish_method_config(RunConfig& config, const MethodFlags& flags,
                          const CLI::App* cmd) {
  config.method = anonypipe::parse_method(flags.method);
  // kernel_radius tracks sigma unless pinned explicitly
  if (cmd->count("--gauss.sigma") > 0 &&
      cmd->count("--gauss.kernel_radius") == 0) {
    config.gauss.kernel_radius =
        static_cast<int>(std::ceil(3.0 * config.gauss.sigma));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anonypipe — dataset face anonymization toolkit"};
  app.set_version_flag("--version", anonypipe::kToolkitVersion);
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<SectionedToml>());
  app.set_config("--config", "",
                 "TOML configuration; keys live under a section named "
                 "after the subcommand, e.g. [anonymize]");

  // ---- anonymize -----------------------------------------------------
  RunConfig anon_config;
  MethodFlags anon_flags;
  CLI::App* anonymize = app.add_subcommand(
      "anonymize", "Detect faces and anonymize every image in a tree");
  anonymize->fallthrough();
  anonymize->add_option("--in", anon_config.input_dir,
                        "Input directory of PNG/JPEG images")
      ->required();
  anonymize->add_option("--out", anon_config.output_dir,
                        "Output directory (mirrors the input tree)")
      ->required();
  anonymize->add_option("--method", anon_flags.method,
                        "Anonymization method: gauss, crop, pixel, ldfa")
      ->check(CLI::IsMember({"gauss", "crop", "pixel", "ldfa"}))
      ->capture_default_str();
  anonymize->add_option("--threshold", anon_config.threshold,
                        "Detection confidence threshold")
      ->capture_default_str();
  anonymize->add_option("--seed", anon_config.base_seed,
                        "Base seed; face i of an image uses seed + i")
      ->capture_default_str();
  anonymize->add_option("--jobs", anon_config.jobs,
                        "Worker threads (images are independent)")
      ->capture_default_str();
  anonymize->add_option("--format", anon_config.output_format,
                        "Output codec: png or jpeg")
      ->check(CLI::IsMember({"png", "jpeg"}))
      ->capture_default_str();
  anonymize->add_option("--jpeg-quality", anon_config.jpeg_quality,
                        "JPEG quality when --format jpeg")
      ->capture_default_str();
  anonymize->add_option("--gauss.sigma", anon_config.gauss.sigma,
                        "Gaussian blur sigma")
      ->capture_default_str();
  anonymize->add_option("--gauss.kernel_radius",
                        anon_config.gauss.kernel_radius,
                        "Gaussian kernel radius (taps = 2r + 1)")
      ->capture_default_str();
  anonymize->add_option("--pixel.patch_size", anon_config.pixel.patch_size,
                        "Pixelization tile edge length")
      ->capture_default_str();
  anonymize->add_option("--ldfa.context_pad", anon_config.ldfa.context_pad,
                        "Context padding around each face, per side")
      ->capture_default_str();
  anonymize->add_option("--ldfa.model_resolution",
                        anon_config.ldfa.model_resolution,
                        "Square resolution handed to the inpainter")
      ->capture_default_str();
  anonymize->add_option("--ldfa.prompt", anon_config.ldfa.prompt,
                        "Inpainting prompt");
  anonymize->add_option("--ldfa.cfg_scale", anon_config.ldfa.cfg_scale,
                        "Classifier-free guidance scale")
      ->capture_default_str();
  anonymize->add_option("--ldfa.sampler_id", anon_config.ldfa.sampler_id,
                        "Sampler identifier passed to the backend")
      ->capture_default_str();
  anonymize->add_option("--ldfa.inference_steps",
                        anon_config.ldfa.inference_steps,
                        "Diffusion inference steps")
      ->capture_default_str();
  add_backend_options(anonymize, anon_config);

  // ---- detect --------------------------------------------------------
  RunConfig detect_config;
  std::string detect_out;
  CLI::App* detect = app.add_subcommand(
      "detect", "Detect faces and write a detection manifest");
  detect->fallthrough();
  detect->add_option("--in", detect_config.input_dir, "Input directory")
      ->required();
  detect->add_option("--out", detect_out, "Manifest output path")
      ->required();
  detect->add_option("--threshold", detect_config.threshold,
                     "Detection confidence threshold")
      ->capture_default_str();
  add_backend_options(detect, detect_config);

  // ---- eval-det ------------------------------------------------------
  std::string evaldet_gt, evaldet_pred, evaldet_out;
  std::vector<double> evaldet_thresholds;
  CLI::App* evaldet = app.add_subcommand(
      "eval-det", "Detection mAP report (size-bucketed) plus NoA");
  evaldet->fallthrough();
  evaldet->add_option("--gt", evaldet_gt, "Ground-truth manifest")
      ->required();
  evaldet->add_option("--pred", evaldet_pred, "Prediction manifest")
      ->required();
  evaldet->add_option("--out", evaldet_out, "Report output path")
      ->required();
  evaldet->add_option("--iou-thresholds", evaldet_thresholds,
                      "IoU thresholds (default 0.50:0.05:0.95)")
      ->delimiter(',');

  // ---- eval-embed ----------------------------------------------------
  RunConfig embed_config;
  std::string embed_orig, embed_anon, embed_manifest, embed_out;
  anonypipe::EmbedEvalOptions embed_options;
  CLI::App* evalembed = app.add_subcommand(
      "eval-embed",
      "Embedding distances between original and anonymized faces");
  evalembed->fallthrough();
  evalembed->add_option("--orig", embed_orig, "Original image directory")
      ->required();
  evalembed->add_option("--anon", embed_anon, "Anonymized image directory")
      ->required();
  evalembed->add_option("--manifest", embed_manifest,
                        "Detection manifest with the face boxes")
      ->required();
  evalembed->add_option("--out", embed_out, "Records CSV output path")
      ->required();
  evalembed->add_option("--bins", embed_options.bins,
                        "Companion histogram bin count")
      ->capture_default_str();
  evalembed->add_option("--lo", embed_options.lo, "Histogram lower bound")
      ->capture_default_str();
  evalembed->add_option("--hi", embed_options.hi, "Histogram upper bound")
      ->capture_default_str();
  evalembed->add_option("--svg", embed_options.svg_path,
                        "Optional histogram SVG output path");
  add_backend_options(evalembed, embed_config);

  // ---- eval-seg ------------------------------------------------------
  std::string evalseg_gt, evalseg_pred, evalseg_out, evalseg_baseline;
  std::vector<std::int32_t> evalseg_classes;
  CLI::App* evalseg = app.add_subcommand(
      "eval-seg", "Segmentation IoU / iIoU report over raster pairs");
  evalseg->fallthrough();
  evalseg->add_option("--gt", evalseg_gt, "Ground-truth raster directory")
      ->required();
  evalseg->add_option("--pred", evalseg_pred, "Prediction raster directory")
      ->required();
  evalseg->add_option("--classes", evalseg_classes,
                      "Class ids to evaluate")
      ->required()
      ->delimiter(',');
  evalseg->add_option("--out", evalseg_out, "Report output path")
      ->required();
  evalseg->add_option("--baseline", evalseg_baseline,
                      "Baseline report for relative IoU deltas");

  // ---- histogram -----------------------------------------------------
  std::string hist_in, hist_out;
  anonypipe::HistogramOptions hist_options;
  CLI::App* hist = app.add_subcommand(
      "histogram", "Bin a numeric CSV column into a histogram CSV/SVG");
  hist->fallthrough();
  hist->add_option("--in", hist_in, "Input CSV")->required();
  hist->add_option("--out", hist_out, "Histogram CSV output path")
      ->required();
  hist->add_option("--column", hist_options.column, "Column to bin")
      ->capture_default_str();
  hist->add_option("--bins", hist_options.bins, "Bin count")
      ->capture_default_str();
  hist->add_option("--lo", hist_options.lo, "Lower bound")
      ->capture_default_str();
  hist->add_option("--hi", hist_options.hi, "Upper bound")
      ->capture_default_str();
  hist->add_option("--svg", hist_options.svg_path,
                   "Optional SVG output path");
  hist->add_option("--json", hist_options.json_path,
                   "Optional JSON output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*anonymize) {
      finish_method_config(anon_config, anon_flags, anonymize);
      return anonypipe::run_anonymize(anon_config);
    }
    if (*detect) {
      return anonypipe::run_detect(detect_config, detect_out);
    }
    if (*evaldet) {
      return anonypipe::run_eval_det(evaldet_gt, evaldet_pred, evaldet_out,
                                     evaldet_thresholds);
    }
    if (*evalembed) {
      return anonypipe::run_eval_embed(embed_orig, embed_anon,
                                       embed_manifest, embed_out,
                                       embed_config, embed_options);
    }
    if (*evalseg) {
      return anonypipe::run_eval_seg(evalseg_gt, evalseg_pred,
                                     evalseg_classes, evalseg_out,
                                     evalseg_baseline);
    }
    if (*hist) {
      return anonypipe::run_histogram(hist_in, hist_out, hist_options);
    }
  } catch (const anonypipe::ConfigError& e) {
    std::cerr << "anonypipe: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "anonypipe: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
