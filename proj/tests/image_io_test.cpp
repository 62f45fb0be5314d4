// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "anonypipe/errors.hpp"
#include "anonypipe/image_io.hpp"
#include "test_util.hpp"

using namespace anonypipe;

TEST_CASE("PNG write/read round-trips bit-exactly") {
  testing::TempDir dir("anonypipe-io-test");
  testing::Rng rng(31);
  const ImageBuffer img = testing::random_image(rng, 33, 17);
  const auto path = dir.path() / "img.png";
  write_png(img, path);
  CHECK(read_image(path) == img);
}

TEST_CASE("PNG bytes are identical across writes") {
  testing::TempDir dir("anonypipe-io-test");
  testing::Rng rng(32);
  const ImageBuffer img = testing::random_image(rng, 20, 20);
  write_png(img, dir.path() / "a.png");
  write_png(img, dir.path() / "b.png");
  std::ifstream a(dir.path() / "a.png", std::ios::binary);
  std::ifstream b(dir.path() / "b.png", std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
}

TEST_CASE("decoding the same file twice gives identical pixels") {
  testing::TempDir dir("anonypipe-io-test");
  testing::Rng rng(33);
  const auto path = dir.path() / "img.png";
  write_png(testing::random_image(rng, 40, 25), path);
  CHECK(read_image(path) == read_image(path));
}

TEST_CASE("JPEG write/read preserves dimensions and approximate content") {
  testing::TempDir dir("anonypipe-io-test");
  const ImageBuffer img(24, 16, 128);
  const auto path = dir.path() / "img.jpg";
  write_jpeg(img, path, 95);
  const ImageBuffer back = read_image(path);
  CHECK(back.width() == 24);
  CHECK(back.height() == 16);
  // Constant gray survives JPEG essentially unchanged.
  for (const std::uint8_t v : back.pixels()) {
    CHECK(v >= 120);
    CHECK(v <= 136);
  }
}

TEST_CASE("codec is chosen by magic bytes, not extension") {
  testing::TempDir dir("anonypipe-io-test");
  testing::Rng rng(34);
  const ImageBuffer img = testing::random_image(rng, 8, 8);
  const auto path = dir.path() / "actually_png.jpg";
  write_png(img, path);
  CHECK(read_image(path) == img);
}

TEST_CASE("unknown file content is rejected") {
  testing::TempDir dir("anonypipe-io-test");
  const auto path = dir.path() / "junk.png";
  {
    std::ofstream out(path, std::ios::binary);
    out << "this is not an image";
  }
  CHECK_THROWS_AS(read_image(path), ImageIoError);
  CHECK_THROWS_AS(read_image(dir.path() / "missing.png"), ImageIoError);
}

TEST_CASE("truncated PNG is a decode error") {
  testing::TempDir dir("anonypipe-io-test");
  testing::Rng rng(35);
  const auto path = dir.path() / "full.png";
  write_png(testing::random_image(rng, 30, 30), path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  const auto cut = dir.path() / "cut.png";
  {
    std::ofstream out(cut, std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(read_image(cut), ImageIoError);
}
