// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "anonypipe/image.hpp"

namespace anonypipe {

/// Decodes a PNG or JPEG file to 8-bit RGB. The codec is chosen by content
/// (magic bytes), not by file extension. Grayscale and palette images are
/// expanded, 16-bit samples reduced, alpha dropped.
ImageBuffer read_image(const std::filesystem::path& path);

void write_png(const ImageBuffer& img, const std::filesystem::path& path);

void write_jpeg(const ImageBuffer& img, const std::filesystem::path& path,
                int quality = 95);

}  // namespace anonypipe
