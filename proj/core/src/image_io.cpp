// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "anonypipe/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "anonypipe/errors.hpp"

namespace anonypipe {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) {
    throw ImageIoError("cannot open '" + path.string() + "'");
  }
  return f;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

ImageBuffer read_png_file(std::FILE* f, const std::filesystem::path& path) {
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           png_error_handler,
                                           png_warning_handler);
  if (!png) throw ImageIoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("libpng init failed");
  }

  std::vector<std::uint8_t> data;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("PNG decode failed for '" + path.string() + "': " +
                       err);
  }

  png_init_io(png, f);
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
  }
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  if (row_bytes != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("PNG decode: unexpected row layout in '" +
                       path.string() + "'");
  }

  data.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = data.data() + static_cast<std::size_t>(y) * row_bytes;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return ImageBuffer(width, height, std::move(data));
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  std::string message;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  char buf[JMSG_LENGTH_MAX];
  (*cinfo->err->format_message)(cinfo, buf);
  mgr->message = buf;
  std::longjmp(mgr->jump, 1);
}

ImageBuffer read_jpeg_file(std::FILE* f, const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageIoError("JPEG decode failed for '" + path.string() + "': " +
                       err.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height *
                                 3);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    std::uint8_t* row = data.data() + cinfo.output_scanline * row_bytes;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  return ImageBuffer(width, height, std::move(data));
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char magic[8] = {0};
  const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
  std::rewind(f.get());

  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G',
                                           '\r', '\n', 0x1a, '\n'};
  if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) {
    return read_png_file(f.get(), path);
  }
  if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) {
    return read_jpeg_file(f.get(), path);
  }
  throw ImageIoError("'" + path.string() +
                     "' is neither PNG nor JPEG (unknown magic bytes)");
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.empty()) throw ImageIoError("write_png: empty image");
  FilePtr f = open_file(path, "wb");

  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_handler,
                                            png_warning_handler);
  if (!png) throw ImageIoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("libpng init failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("PNG encode failed for '" + path.string() + "': " +
                       err);
  }

  png_init_io(png, f.get());
  // Fixed settings so identical pixels always produce identical bytes.
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 3;
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(
                           img.pixels().data() +
                           static_cast<std::size_t>(y) * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_jpeg(const ImageBuffer& img, const std::filesystem::path& path,
                int quality) {
  if (img.empty()) throw ImageIoError("write_jpeg: empty image");
  if (quality < 1 || quality > 100) {
    throw ImageIoError("write_jpeg: quality must be in [1, 100]");
  }
  FilePtr f = open_file(path, "wb");

  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;

  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw ImageIoError("JPEG encode failed for '" + path.string() + "': " +
                       err.message);
  }

  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f.get());
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);

  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(
        img.pixels().data() + cinfo.next_scanline * row_bytes);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

}  // namespace anonypipe
