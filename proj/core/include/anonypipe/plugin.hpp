// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "anonypipe/backends.hpp"

namespace anonypipe {

/// Knobs shared by backend resolution. The stub-specific fields mirror the
/// `stub.*` config keys; `backend_dir` overrides ANONYPIPE_BACKEND_DIR.
struct BackendOptions {
  std::filesystem::path backend_dir;
  std::filesystem::path sidecar_path;       // stub detector payload
  bool identity = false;                    // stub inpainter variant
  std::vector<std::uint64_t> fail_seeds;    // stub inpainter fault injection
  int embed_dim = 2622;                     // stub embedder dimensionality
};

/// Directory holding plugin executables, from ANONYPIPE_BACKEND_DIR
/// (empty when unset).
std::filesystem::path default_backend_dir();

/// Backend resolution by name: "stub" selects the built-in test double;
/// any other name selects the executable <backend_dir>/<name> speaking the
/// JSON request/response protocol described in the README.
std::unique_ptr<DetectorBackend> resolve_detector(
    const std::string& name, const BackendOptions& options);
std::unique_ptr<InpaintBackend> resolve_inpainter(
    const std::string& name, const BackendOptions& options);
std::unique_ptr<EmbedBackend> resolve_embedder(
    const std::string& name, const BackendOptions& options);

}  // namespace anonypipe
