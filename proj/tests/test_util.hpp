// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "anonypipe/detection.hpp"
#include "anonypipe/image.hpp"

namespace anonypipe::testing {

// mt19937_64 with explicit range mapping: identical sequences on every
// platform, unlike std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  double uniform(double lo, double hi) {
    const double unit =
        static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    return lo + unit * (hi - lo);
  }

 private:
  std::mt19937_64 engine_;
};

inline ImageBuffer random_image(Rng& rng, int w, int h) {
  ImageBuffer img(w, h);
  for (auto& px : img.pixels()) {
    px = static_cast<std::uint8_t>(rng.next_u64() % 256);
  }
  return img;
}

inline BoundingBox random_box(Rng& rng, int image_w, int image_h) {
  const int x0 = rng.uniform_int(0, image_w - 2);
  const int y0 = rng.uniform_int(0, image_h - 2);
  const int x1 = rng.uniform_int(x0 + 1, image_w - 1) + 1;
  const int y1 = rng.uniform_int(y0 + 1, image_h - 1) + 1;
  return BoundingBox{x0, y0, std::min(x1, image_w), std::min(y1, image_h)};
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace anonypipe::testing
