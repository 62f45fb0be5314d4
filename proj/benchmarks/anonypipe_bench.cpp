// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the pixel-level hot paths: patch resampling, the
// three naive anonymizers, detection matching and the weighted
// segmentation tally.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "anonypipe/anonymizers.hpp"
#include "anonypipe/backends.hpp"
#include "anonypipe/detection.hpp"
#include "anonypipe/image.hpp"
#include "anonypipe/metrics.hpp"

namespace {

using namespace anonypipe;

std::uint64_t splitmix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t x = state;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

ImageBuffer noise_image(int w, int h, std::uint64_t seed) {
  ImageBuffer img(w, h);
  for (auto& px : img.pixels()) {
    px = static_cast<std::uint8_t>(splitmix(seed) % 256);
  }
  return img;
}

void BM_ResizeUp(benchmark::State& state) {
  const ImageBuffer patch = noise_image(94, 94, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resize(patch, 512, 512));
  }
}
BENCHMARK(BM_ResizeUp);

void BM_ResizeDown(benchmark::State& state) {
  const ImageBuffer patch = noise_image(512, 512, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resize(patch, 94, 94));
  }
}
BENCHMARK(BM_ResizeDown);

void BM_GaussBlur(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  ImageBuffer img = noise_image(side + 16, side + 16, 3);
  const BoundingBox box{8, 8, 8 + side, 8 + side};
  for (auto _ : state) {
    anonymize_gauss(img, box, GaussConfig{});
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_GaussBlur)->Arg(32)->Arg(96);

void BM_Pixelate(benchmark::State& state) {
  ImageBuffer img = noise_image(256, 256, 4);
  const BoundingBox box{16, 16, 240, 240};
  for (auto _ : state) {
    anonymize_pixel(img, box, PixelConfig{});
  }
}
BENCHMARK(BM_Pixelate);

void BM_CropPasteRoundTrip(benchmark::State& state) {
  ImageBuffer img = noise_image(2048, 1024, 5);
  const BoundingBox box{400, 300, 912, 812};
  for (auto _ : state) {
    paste(img, crop(img, box), box);
  }
}
BENCHMARK(BM_CropPasteRoundTrip);

void BM_MatchAndAp(benchmark::State& state) {
  std::uint64_t seed = 6;
  std::vector<FaceDetection> gt, pred;
  for (int i = 0; i < 30; ++i) {
    const int x = static_cast<int>(splitmix(seed) % 1900);
    const int y = static_cast<int>(splitmix(seed) % 1000);
    gt.push_back(make_face(BoundingBox{x, y, x + 24, y + 24}, 1.0));
  }
  for (int i = 0; i < 60; ++i) {
    const int x = static_cast<int>(splitmix(seed) % 1900);
    const int y = static_cast<int>(splitmix(seed) % 1000);
    pred.push_back(make_face(
        BoundingBox{x, y, x + 24, y + 24},
        static_cast<double>(splitmix(seed) % 1000) / 1000.0));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(match_and_ap(gt, pred, 0.5));
  }
}
BENCHMARK(BM_MatchAndAp);

void BM_WeightedSegCounts(benchmark::State& state) {
  const int side = 512;
  InstanceRaster gt;
  gt.classes = LabelRaster::filled(side, side, 0);
  gt.instances = LabelRaster::filled(side, side, 0);
  LabelRaster pred = LabelRaster::filled(side, side, 0);
  std::uint64_t seed = 7;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      if (splitmix(seed) % 4 == 0) {
        gt.classes.set(x, y, 1);
        gt.instances.set(x, y, 1 + static_cast<int>(splitmix(seed) % 50));
      }
      pred.set(x, y, static_cast<int>(splitmix(seed) % 2));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(weighted_seg_counts(gt, pred, 1, 64.0));
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_WeightedSegCounts);

void BM_EmbeddingL2(benchmark::State& state) {
  std::uint64_t seed = 8;
  std::vector<double> a(2622), b(2622);
  for (int i = 0; i < 2622; ++i) {
    a[i] = static_cast<double>(splitmix(seed) % 2000) / 1000.0 - 1.0;
    b[i] = static_cast<double>(splitmix(seed) % 2000) / 1000.0 - 1.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(embedding_l2(a, b));
  }
}
BENCHMARK(BM_EmbeddingL2);

void BM_StubEmbedding(benchmark::State& state) {
  const ImageBuffer img = noise_image(64, 64, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stub_embedding(img, 2622));
  }
}
BENCHMARK(BM_StubEmbedding);

}  // namespace

BENCHMARK_MAIN();
