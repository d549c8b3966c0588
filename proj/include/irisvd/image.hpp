#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irisvd/error.hpp"

namespace irisvd {

using Intensity = std::uint8_t;

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<Intensity> pixels;  // row-major, width * height

  GrayImage() = default;
  GrayImage(int w, int h, Intensity fill = 0) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw InvalidArgument("image dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }
  GrayImage(int w, int h, std::vector<Intensity> data) : width(w), height(h), pixels(std::move(data)) {
    if (w <= 0 || h <= 0) throw InvalidArgument("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
      throw InvalidArgument("pixel count does not match width * height");
  }

  Intensity& at(int x, int y) { return pixels[index(x, y)]; }
  Intensity at(int x, int y) const { return pixels[index(x, y)]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  std::span<const Intensity> row(int y) const {
    return std::span<const Intensity>(pixels).subspan(index(0, y), static_cast<std::size_t>(width));
  }

  bool operator==(const GrayImage&) const = default;

private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
};

// Rounding used throughout the raster code: half away from zero.
inline double round_half_away(double v) { return std::round(v); }

// Rounded quotient num / den (den > 0), half away from zero, in exact integer arithmetic.
inline long long rounded_div(long long num, long long den) {
  if (num >= 0) return (2 * num + den) / (2 * den);
  return -((2 * -num + den) / (2 * den));
}

namespace detail {

class PgmCursor {
public:
  explicit PgmCursor(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Reads an unsigned decimal header field; `what` names it in errors.
  long long read_uint(const char* what, PgmErrorKind kind = PgmErrorKind::malformed_header) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    if (at_end()) throw PgmParseError(kind, start, std::string("missing ") + what);
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1LL << 40)) throw PgmParseError(kind, start, std::string(what) + " is too large");
      ++pos_;
    }
    if (pos_ == start) throw PgmParseError(kind, start, std::string("expected ") + what);
    return v;
  }

  char peek() const { return bytes_[pos_]; }
  void advance(std::size_t n = 1) { pos_ += n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::string_view rest() const { return bytes_.substr(pos_); }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses a binary (P5) or ASCII (P2) PGM. Values are rescaled to 0..255 when
// maxval is below 255.
inline GrayImage read_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2'))
    throw PgmParseError(PgmErrorKind::bad_magic, 0, "expected magic P5 or P2");
  const bool binary = bytes[1] == '5';
  detail::PgmCursor cur(bytes);
  cur.advance(2);
  if (!cur.at_end() && !std::isspace(static_cast<unsigned char>(cur.peek())) && cur.peek() != '#')
    throw PgmParseError(PgmErrorKind::bad_magic, 2, "magic must be followed by whitespace");

  cur.skip_space_and_comments();
  const std::size_t width_at = cur.offset();
  const long long w = cur.read_uint("width");
  const long long h = cur.read_uint("height");
  if (w <= 0 || h <= 0) throw PgmParseError(PgmErrorKind::malformed_header, width_at, "dimensions must be positive");
  if (w > (1 << 20) || h > (1 << 20))
    throw PgmParseError(PgmErrorKind::malformed_header, width_at, "dimensions are unreasonably large");
  cur.skip_space_and_comments();
  const std::size_t maxval_at = cur.offset();
  const long long maxval = cur.read_uint("maxval");
  if (maxval < 1 || maxval > 255)
    throw PgmParseError(PgmErrorKind::maxval_out_of_range, maxval_at, "maxval " + std::to_string(maxval) + " outside 1..255");

  const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<Intensity> pixels(count);
  auto rescale = [maxval](long long v) {
    return static_cast<Intensity>(maxval == 255 ? v : rounded_div(v * 255, maxval));
  };

  if (binary) {
    if (cur.at_end() || !std::isspace(static_cast<unsigned char>(cur.peek())))
      throw PgmParseError(PgmErrorKind::malformed_header, cur.offset(), "expected single whitespace after maxval");
    cur.advance();
    const std::size_t payload_at = cur.offset();
    if (cur.remaining() < count)
      throw PgmParseError(PgmErrorKind::truncated_data, payload_at + cur.remaining(),
                          "truncated pixel data: expected " + std::to_string(count) + " bytes, found " +
                              std::to_string(cur.remaining()));
    const std::string_view payload = cur.rest();
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = static_cast<unsigned char>(payload[i]);
      if (v > maxval) throw PgmParseError(PgmErrorKind::bad_pixel, payload_at + i, "pixel exceeds maxval");
      pixels[i] = rescale(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      cur.skip_space_and_comments();
      if (cur.at_end())
        throw PgmParseError(PgmErrorKind::truncated_data, cur.offset(),
                            "truncated pixel data: " + std::to_string(i) + " of " + std::to_string(count) + " values");
      const std::size_t at = cur.offset();
      const long long v = cur.read_uint("pixel value", PgmErrorKind::bad_pixel);
      if (v > maxval) throw PgmParseError(PgmErrorKind::bad_pixel, at, "pixel exceeds maxval");
      pixels[i] = rescale(v);
    }
  }
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

// Serializes with maxval 255 and no comments. ASCII output wraps lines below 70 characters.
inline std::string write_pgm(const GrayImage& img, bool ascii = false) {
  std::string out = ascii ? "P2\n" : "P5\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  if (!ascii) {
    out.append(img.pixels.begin(), img.pixels.end());
    return out;
  }
  for (int y = 0; y < img.height; ++y) {
    std::size_t line = 0;
    for (int x = 0; x < img.width; ++x) {
      const std::string v = std::to_string(img.at(x, y));
      if (line > 0 && line + 1 + v.size() > 69) {
        out += '\n';
        line = 0;
      } else if (line > 0) {
        out += ' ';
        ++line;
      }
      out += v;
      line += v.size();
    }
    out += '\n';
  }
  return out;
}

inline GrayImage read_pgm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_pgm(bytes);
}

inline void write_pgm_file(const std::filesystem::path& path, const GrayImage& img, bool ascii = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = write_pgm(img, ascii);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// Affine map of [low, high] onto [0, 255], clamped.
inline Intensity stretch_value(Intensity p, Intensity low, Intensity high) {
  const long long v = rounded_div((static_cast<long long>(p) - low) * 255, static_cast<long long>(high) - low);
  return static_cast<Intensity>(std::clamp<long long>(v, 0, 255));
}

inline GrayImage contrast_stretch(const GrayImage& img, Intensity low, Intensity high) {
  if (low >= high) throw InvalidArgument("contrast_stretch: low must be below high");
  GrayImage out = img;
  for (auto& p : out.pixels) p = stretch_value(p, low, high);
  return out;
}

// Averages non-overlapping block x block tiles; partial tiles at the right and
// bottom edges are dropped.
inline GrayImage block_downsample(const GrayImage& img, int block) {
  if (block <= 0) throw InvalidArgument("block_downsample: block must be positive");
  if (img.width < block || img.height < block)
    throw InvalidArgument("block_downsample: image smaller than one block");
  const int ow = img.width / block;
  const int oh = img.height / block;
  GrayImage out(ow, oh);
  const long long n = static_cast<long long>(block) * block;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      long long sum = 0;
      for (int dy = 0; dy < block; ++dy)
        for (int dx = 0; dx < block; ++dx) sum += img.at(ox * block + dx, oy * block + dy);
      out.at(ox, oy) = static_cast<Intensity>(rounded_div(sum, n));
    }
  }
  return out;
}

}  // namespace irisvd
