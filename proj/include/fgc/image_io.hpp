#pragma once

#include <png.h>

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgc/image.hpp"

namespace fgc {

/// Unsupported or malformed image file. The message names the offending
/// property (magic, bit depth, colour type, ...).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

// Tokenizer for the ASCII header of a netpbm file; skips '#' comments.
class PnmHeader {
 public:
  PnmHeader(const std::vector<unsigned char>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  int next_int() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw FormatError("PGM '" + path_ + "': malformed header");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000) throw FormatError("PGM '" + path_ + "': header value too large");
    }
    return static_cast<int>(v);
  }

  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  const std::vector<unsigned char>& bytes_;
  const std::string& path_;
  std::size_t pos_ = 2;
};

inline GrayImage from_raw(int w, int h, const std::vector<std::uint8_t>& raw) {
  std::vector<double> v(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) v[i] = raw[i] / 255.0;
  return GrayImage(w, h, std::move(v));
}

inline void check_ingest_size(int w, int h, const std::string& path) {
  if (w < 2 || h < 2) {
    throw FormatError("'" + path + "': image must be at least 2x2, got " +
                      std::to_string(w) + "x" + std::to_string(h));
  }
}

inline GrayImage decode_pgm(const std::vector<unsigned char>& bytes,
                            const std::string& path) {
  const bool ascii = bytes[1] == '2';
  PnmHeader hdr(bytes, path);
  const int w = hdr.next_int();
  const int h = hdr.next_int();
  const int maxval = hdr.next_int();
  check_ingest_size(w, h, path);
  if (maxval < 1 || maxval > 255) {
    throw FormatError("PGM '" + path + "': unsupported bit depth (maxval " +
                      std::to_string(maxval) + ", only 8-bit is supported)");
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> raw(n);
  if (ascii) {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = hdr.next_int();
      if (v > maxval) throw FormatError("PGM '" + path + "': sample exceeds maxval");
      raw[i] = static_cast<std::uint8_t>(v);
    }
  } else {
    // Exactly one whitespace byte separates maxval from the raster.
    hdr.advance(1);
    if (bytes.size() < hdr.pos() + n) {
      throw FormatError("PGM '" + path + "': truncated raster");
    }
    std::memcpy(raw.data(), bytes.data() + hdr.pos(), n);
    for (auto v : raw)
      if (v > maxval) throw FormatError("PGM '" + path + "': sample exceeds maxval");
  }
  return from_raw(w, h, raw);
}

inline GrayImage decode_png(const std::vector<unsigned char>& bytes,
                            const std::string& path) {
  // IHDR is always the first chunk: signature(8) len(4) type(4) w h depth ctype.
  if (bytes.size() < 33 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw FormatError("PNG '" + path + "': missing IHDR");
  }
  const int depth = bytes[24];
  const int ctype = bytes[25];
  if (depth != 8) {
    throw FormatError("PNG '" + path + "': unsupported bit depth " +
                      std::to_string(depth) + " (only 8-bit grayscale is supported)");
  }
  if (ctype != 0) {
    throw FormatError("PNG '" + path + "': unsupported colour type " +
                      std::to_string(ctype) + " (only grayscale is supported)");
  }

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw FormatError("PNG '" + path + "': " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  const int w = static_cast<int>(img.width);
  const int h = static_cast<int>(img.height);
  try {
    check_ingest_size(w, h, path);
  } catch (...) {
    png_image_free(&img);
    throw;
  }
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("PNG '" + path + "': " + msg);
  }
  return from_raw(w, h, raw);
}

inline void write_png(const std::string& path, int w, int h, bool rgb,
                      const std::vector<std::uint8_t>& pixels) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw std::runtime_error("cannot write '" + path + "': " + msg);
  }
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace detail

/// Loads an 8-bit grayscale PGM (P2/P5) or PNG; the format is detected from
/// the file's magic bytes. Intensities are raw/255.
inline GrayImage load_image(const std::string& path) {
  const auto bytes = detail::read_file(path);
  static constexpr std::array<unsigned char, 8> kPngSig = {0x89, 'P', 'N', 'G',
                                                           '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig.begin(), kPngSig.end(), bytes.begin())) {
    return detail::decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) {
    return detail::decode_pgm(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && std::isdigit(bytes[1])) {
    throw FormatError("'" + path + "': unsupported netpbm variant P" +
                      std::string(1, static_cast<char>(bytes[1])) +
                      " (only grayscale P2/P5)");
  }
  throw FormatError("'" + path + "': unrecognized format (expected PGM or PNG)");
}

/// Writes an 8-bit grayscale PNG. Values are rounded to the nearest 1/255,
/// so any image that came from load_image re-encodes bit-exactly.
inline void save_image(const GrayImage& image, const std::string& path) {
  std::vector<std::uint8_t> px(image.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = detail::quantize(image.pixels()[i]);
  detail::write_png(path, image.width(), image.height(), false, px);
}

/// Binary P5 PGM writer.
inline void save_pgm(const GrayImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (double v : image.pixels()) out.put(static_cast<char>(detail::quantize(v)));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Masks are stored as grayscale PNG, 255 for object and 0 for background.
inline void save_mask(const BinaryMask& mask, const std::string& path) {
  std::vector<std::uint8_t> px(mask.size());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      px[mask.index(x, y)] = mask.at(x, y) ? 255 : 0;
  detail::write_png(path, mask.width(), mask.height(), false, px);
}

inline BinaryMask load_mask(const std::string& path) {
  const GrayImage img = load_image(path);
  return threshold(img, 0.5);
}

/// Image with the mask contour burned in at full intensity.
inline GrayImage contour_overlay(const GrayImage& image, const BinaryMask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw std::invalid_argument("contour_overlay: dimension mismatch");
  }
  const BinaryMask edge = contour(mask);
  std::vector<double> v(image.pixels().begin(), image.pixels().end());
  edge.for_each_set([&](int x, int y) { v[image.index(x, y)] = 1.0; });
  return GrayImage(image.width(), image.height(), std::move(v));
}

/// RGB PNG export: the image in gray with the mask contour in green.
inline void save_overlay(const GrayImage& image, const BinaryMask& mask,
                         const std::string& path) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw std::invalid_argument("save_overlay: dimension mismatch");
  }
  const BinaryMask edge = contour(mask);
  std::vector<std::uint8_t> px(image.size() * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const std::size_t i = image.index(x, y);
      const std::uint8_t g = detail::quantize(image.at(x, y));
      if (edge.at(x, y)) {
        px[3 * i] = 0;
        px[3 * i + 1] = 255;
        px[3 * i + 2] = 0;
      } else {
        px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = g;
      }
    }
  }
  detail::write_png(path, image.width(), image.height(), true, px);
}

}  // namespace fgc
