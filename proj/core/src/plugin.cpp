// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/plugin.hpp"

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anonypipe/errors.hpp"
#include "anonypipe/image_io.hpp"

namespace anonypipe {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path make_scratch_dir() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  const std::uint64_t tag =
      (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::ostringstream name;
  name << "anonypipe-plugin-" << std::hex << tag << "-"
       << counter.fetch_add(1);
  const fs::path dir = fs::temp_directory_path() / name.str();
  fs::create_directories(dir);
  return dir;
}

/// Shared exec machinery: one request JSON file in, one response JSON file
/// out, images exchanged as PNG paths inside a private scratch directory.
class PluginProcess {
 public:
  explicit PluginProcess(fs::path exe)
      : exe_(std::move(exe)), scratch_(make_scratch_dir()) {
    if (!fs::exists(exe_)) {
      throw BackendError("plugin executable '" + exe_.string() +
                         "' does not exist");
    }
  }

  ~PluginProcess() {
    std::error_code ec;
    fs::remove_all(scratch_, ec);
  }

  const fs::path& scratch() const { return scratch_; }

  fs::path file(const std::string& stem) {
    return scratch_ / (std::to_string(call_counter_.fetch_add(1)) + "-" +
                       stem);
  }

  json invoke(json request) {
    const fs::path req_path = file("request.json");
    const fs::path resp_path = req_path.parent_path() /
                               (req_path.stem().string() + "-response.json");
    request["response_path"] = resp_path.string();
    {
      std::ofstream out(req_path, std::ios::binary);
      out << request.dump(2);
    }

    const std::string cmd =
        "'" + exe_.string() + "' '" + req_path.string() + "'";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
      throw BackendError("plugin '" + exe_.string() +
                         "' exited with a failure status");
    }

    std::ifstream in(resp_path, std::ios::binary);
    if (!in) {
      throw BackendError("plugin '" + exe_.string() +
                         "' wrote no response file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      return json::parse(ss.str());
    } catch (const json::exception& e) {
      throw BackendError("plugin '" + exe_.string() +
                         "' wrote malformed JSON: " + e.what());
    }
  }

  json capabilities() {
    return invoke(json{{"op", "capabilities"}});
  }

 private:
  fs::path exe_;
  fs::path scratch_;
  std::atomic<std::uint64_t> call_counter_{0};
};

fs::path plugin_path(const std::string& name, const BackendOptions& options) {
  const fs::path dir = options.backend_dir.empty() ? default_backend_dir()
                                                   : options.backend_dir;
  if (dir.empty()) {
    throw BackendError("backend '" + name +
                       "' requested but no backend directory is set "
                       "(ANONYPIPE_BACKEND_DIR)");
  }
  return dir / name;
}

class ProcessDetector : public DetectorBackend {
 public:
  ProcessDetector(const std::string& name, const BackendOptions& options)
      : process_(plugin_path(name, options)) {
    const json caps = process_.capabilities();
    capability_.name = caps.value("name", name);
    capability_.version = caps.value("version", "unknown");
    capability_.safe_for_concurrent_calls =
        caps.value("safe_for_concurrent_calls", false);
  }

  DetectorCapability capability() const override { return capability_; }

  std::vector<FaceDetection> detect(const ImageBuffer& img,
                                    const std::string& image_id) override {
    const fs::path image_path = process_.file("detect-input.png");
    write_png(img, image_path);
    const json response = process_.invoke(json{{"op", "detect"},
                                               {"image", image_path.string()},
                                               {"image_id", image_id}});
    std::vector<FaceDetection> faces;
    try {
      for (const auto& jf : response.at("faces")) {
        const auto& jb = jf.at("box");
        const BoundingBox box{jb.at(0).get<int>(), jb.at(1).get<int>(),
                              jb.at(2).get<int>(), jb.at(3).get<int>()};
        if (!box.valid()) {
          throw BackendError("detector plugin returned a degenerate box");
        }
        faces.push_back(
            FaceDetection{box, jf.at("confidence").get<double>(),
                          size_category(box)});
      }
    } catch (const json::exception& e) {
      throw BackendError(std::string("detector plugin response malformed: ") +
                         e.what());
    }
    std::error_code ec;
    fs::remove(image_path, ec);
    return faces;
  }

 private:
  PluginProcess process_;
  DetectorCapability capability_;
};

class ProcessInpainter : public InpaintBackend {
 public:
  ProcessInpainter(const std::string& name, const BackendOptions& options)
      : process_(plugin_path(name, options)) {
    const json caps = process_.capabilities();
    capability_.name = caps.value("name", name);
    capability_.version = caps.value("version", "unknown");
    capability_.native_resolution = caps.value("native_resolution", 512);
    capability_.safe_for_concurrent_calls =
        caps.value("safe_for_concurrent_calls", false);
    capability_.deterministic = caps.value("deterministic", false);
  }

  InpainterCapability capability() const override { return capability_; }

  ImageBuffer inpaint(const ImageBuffer& patch, const MaskBuffer& mask,
                      const InpaintRequest& request) override {
    if (mask.width != patch.width() || mask.height != patch.height()) {
      throw BackendError("inpaint mask dimensions do not match patch");
    }
    const fs::path patch_path = process_.file("inpaint-patch.png");
    const fs::path mask_path = process_.file("inpaint-mask.png");
    const fs::path out_path = process_.file("inpaint-output.png");
    write_png(patch, patch_path);

    ImageBuffer mask_img(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        const std::uint8_t v = mask.at(x, y) ? 255 : 0;
        mask_img.at(x, y, 0) = v;
        mask_img.at(x, y, 1) = v;
        mask_img.at(x, y, 2) = v;
      }
    }
    write_png(mask_img, mask_path);

    process_.invoke(json{{"op", "inpaint"},
                         {"image", patch_path.string()},
                         {"mask", mask_path.string()},
                         {"output", out_path.string()},
                         {"prompt", request.prompt},
                         {"cfg_scale", request.cfg_scale},
                         {"sampler_id", request.sampler_id},
                         {"steps", request.inference_steps},
                         {"seed", request.seed}});
    if (!fs::exists(out_path)) {
      throw BackendError("inpaint plugin wrote no output image");
    }
    ImageBuffer result = read_image(out_path);
    std::error_code ec;
    fs::remove(patch_path, ec);
    fs::remove(mask_path, ec);
    fs::remove(out_path, ec);
    return result;
  }

 private:
  PluginProcess process_;
  InpainterCapability capability_;
};

class ProcessEmbedder : public EmbedBackend {
 public:
  ProcessEmbedder(const std::string& name, const BackendOptions& options)
      : process_(plugin_path(name, options)) {
    const json caps = process_.capabilities();
    capability_.name = caps.value("name", name);
    capability_.version = caps.value("version", "unknown");
    capability_.embedding_dim = caps.value("embedding_dim", 0);
    if (capability_.embedding_dim < 2) {
      throw BackendError("embedder plugin declared embedding_dim < 2");
    }
  }

  EmbedderCapability capability() const override { return capability_; }

  std::vector<double> embed(const ImageBuffer& img) override {
    const fs::path image_path = process_.file("embed-input.png");
    write_png(img, image_path);
    const json response = process_.invoke(
        json{{"op", "embed"}, {"image", image_path.string()}});
    std::vector<double> v;
    try {
      v = response.at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("embedder plugin response malformed: ") +
                         e.what());
    }
    if (static_cast<int>(v.size()) != capability_.embedding_dim) {
      throw BackendError("embedder plugin returned " +
                         std::to_string(v.size()) +
                         " values, declared embedding_dim is " +
                         std::to_string(capability_.embedding_dim));
    }
    std::error_code ec;
    fs::remove(image_path, ec);
    return v;
  }

 private:
  PluginProcess process_;
  EmbedderCapability capability_;
};

}  // namespace

std::filesystem::path default_backend_dir() {
  const char* env = std::getenv("ANONYPIPE_BACKEND_DIR");
  return env ? fs::path(env) : fs::path();
}

std::unique_ptr<DetectorBackend> resolve_detector(
    const std::string& name, const BackendOptions& options) {
  if (name == "stub") {
    DetectionManifest sidecar;
    if (!options.sidecar_path.empty()) {
      sidecar = load_manifest(options.sidecar_path);
    }
    return std::make_unique<StubDetector>(std::move(sidecar));
  }
  return std::make_unique<ProcessDetector>(name, options);
}

std::unique_ptr<InpaintBackend> resolve_inpainter(
    const std::string& name, const BackendOptions& options) {
  if (name == "stub") {
    StubInpainterOptions stub;
    stub.identity = options.identity;
    stub.fail_seeds.insert(options.fail_seeds.begin(),
                           options.fail_seeds.end());
    return std::make_unique<StubInpainter>(std::move(stub));
  }
  return std::make_unique<ProcessInpainter>(name, options);
}

std::unique_ptr<EmbedBackend> resolve_embedder(
    const std::string& name, const BackendOptions& options) {
  if (name == "stub") {
    return std::make_unique<StubEmbedder>(options.embed_dim);
  }
  return std::make_unique<ProcessEmbedder>(name, options);
}

}  // namespace anonypipe
