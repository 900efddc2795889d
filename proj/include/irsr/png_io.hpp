#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/image.hpp"

namespace irsr {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngErrorSink {
  std::string message;
};

inline void png_error_handler(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  if (sink) sink->message = msg ? msg : "unknown libpng error";
  png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

class PngReader {
public:
  explicit PngReader(PngErrorSink* sink) {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, png_error_handler,
                                  png_warning_handler);
    if (png_) info_ = png_create_info_struct(png_);
  }
  ~PngReader() { png_destroy_read_struct(&png_, info_ ? &info_ : nullptr, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  bool ok() const noexcept { return png_ && info_; }
  png_structp png() const noexcept { return png_; }
  png_infop info() const noexcept { return info_; }

private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
public:
  explicit PngWriter(PngErrorSink* sink) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, png_error_handler,
                                   png_warning_handler);
    if (png_) info_ = png_create_info_struct(png_);
  }
  ~PngWriter() { png_destroy_write_struct(&png_, info_ ? &info_ : nullptr); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  bool ok() const noexcept { return png_ && info_; }
  png_structp png() const noexcept { return png_; }
  png_infop info() const noexcept { return info_; }

private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

// Header fields captured before decoding rows; plain data so it survives longjmp.
struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int interlace = 0;
};

inline std::string unsupported_layout(const PngHeader& h) {
  if (h.color_type == PNG_COLOR_TYPE_PALETTE) return "palette";
  if (h.color_type & PNG_COLOR_MASK_ALPHA) return "alpha channel";
  if (h.interlace != PNG_INTERLACE_NONE) return "interlaced";
  if (h.color_type == PNG_COLOR_TYPE_GRAY && h.bit_depth != 8 && h.bit_depth != 16)
    return "gray " + std::to_string(h.bit_depth) + "-bit";
  if (h.color_type == PNG_COLOR_TYPE_RGB && h.bit_depth != 8)
    return "rgb " + std::to_string(h.bit_depth) + "-bit";
  if (h.color_type != PNG_COLOR_TYPE_GRAY && h.color_type != PNG_COLOR_TYPE_RGB)
    return "color type " + std::to_string(h.color_type);
  return {};
}

}  // namespace detail

/// Reads a non-interlaced gray-8, gray-16 or RGB-8 PNG without any conversion.
inline Image load_image(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for reading");

  png_byte signature[8] = {};
  if (std::fread(signature, 1, 8, fp.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }

  detail::PngErrorSink sink;
  detail::PngReader reader(&sink);
  if (!reader.ok()) throw IoError("libpng initialisation failed");

  // Everything with a destructor is created before setjmp.
  detail::PngHeader header;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  std::string unsupported;

  if (setjmp(png_jmpbuf(reader.png()))) {
    throw IoError("failed to decode " + path.string() + ": " + sink.message);
  }

  png_init_io(reader.png(), fp.get());
  png_set_sig_bytes(reader.png(), 8);
  png_read_info(reader.png(), reader.info());
  png_get_IHDR(reader.png(), reader.info(), &header.width, &header.height, &header.bit_depth,
               &header.color_type, &header.interlace, nullptr, nullptr);
  if (png_get_valid(reader.png(), reader.info(), PNG_INFO_tRNS)) {
    unsupported = "alpha channel";
  } else {
    unsupported = detail::unsupported_layout(header);
  }
  if (!unsupported.empty()) {
    throw IoError("unsupported format: " + unsupported + " (" + path.string() + ")");
  }

  const int channels = header.color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t bytes_per_sample = header.bit_depth == 16 ? 2 : 1;
  const std::size_t row_bytes = header.width * channels * bytes_per_sample;
  if (png_get_rowbytes(reader.png(), reader.info()) != row_bytes) {
    throw IoError("unexpected PNG row size in " + path.string());
  }
  raw.resize(row_bytes * header.height);
  rows.resize(header.height);
  for (png_uint_32 y = 0; y < header.height; ++y) rows[y] = raw.data() + y * row_bytes;
  png_read_image(reader.png(), rows.data());
  png_read_end(reader.png(), nullptr);

  std::vector<std::uint16_t> samples(static_cast<std::size_t>(header.width) * header.height *
                                     channels);
  if (bytes_per_sample == 2) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
  } else {
    std::copy(raw.begin(), raw.end(), samples.begin());
  }
  return Image(static_cast<int>(header.width), static_cast<int>(header.height), channels,
               header.bit_depth, std::move(samples));
}

/// Writes gray-8/gray-16/RGB-8 losslessly. RGB images must be 8-bit.
inline void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels() == 3 && img.bit_depth() != 8) {
    throw ValidationError("RGB images can only be written at 8 bits");
  }
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");

  detail::PngErrorSink sink;
  detail::PngWriter writer(&sink);
  if (!writer.ok()) throw IoError("libpng initialisation failed");

  const int channels = img.channels();
  const std::size_t bytes_per_sample = img.bit_depth() == 16 ? 2 : 1;
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * channels * bytes_per_sample;
  std::vector<png_byte> raw(row_bytes * img.height());
  std::vector<png_bytep> rows(img.height());
  auto s = img.samples();
  if (bytes_per_sample == 2) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      raw[2 * i] = static_cast<png_byte>(s[i] >> 8);
      raw[2 * i + 1] = static_cast<png_byte>(s[i] & 0xff);
    }
  } else {
    std::copy(s.begin(), s.end(), raw.begin());
  }
  for (int y = 0; y < img.height(); ++y) rows[y] = raw.data() + y * row_bytes;

  if (setjmp(png_jmpbuf(writer.png()))) {
    throw IoError("failed to encode " + path.string() + ": " + sink.message);
  }
  png_init_io(writer.png(), fp.get());
  png_set_IHDR(writer.png(), writer.info(), static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), img.bit_depth(),
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(writer.png(), writer.info());
  png_write_image(writer.png(), rows.data());
  png_write_end(writer.png(), nullptr);
  if (std::fflush(fp.get()) != 0) throw IoError("failed to flush " + path.string());
}

}  // namespace irsr
