#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "irisvd/error.hpp"
#include "irisvd/image.hpp"
#include "irisvd/iris_boundary.hpp"
#include "irisvd/matrix.hpp"
#include "irisvd/segmentation.hpp"

namespace irisvd {

struct TemplateConfig {
  int rows = 40;
  int cols = 40;
  int block = 3;
};

// Iris-basis matrix with entries intensity / 255.
struct IrisTemplate {
  Matrix values;
  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

namespace detail {

// Resizes the column count by centre cropping or by replicating the edge columns.
inline GrayImage fit_columns(const GrayImage& img, int cols) {
  GrayImage out(cols, img.height);
  const int excess = img.width - cols;
  for (int x = 0; x < cols; ++x) {
    const int src = excess >= 0 ? x + excess / 2 : std::clamp(x - (-excess) / 2, 0, img.width - 1);
    for (int y = 0; y < img.height; ++y) out.at(x, y) = img.at(src, y);
  }
  return out;
}

inline GrayImage fit_rows(const GrayImage& img, int rows) {
  GrayImage out(img.width, rows);
  const int excess = img.height - rows;
  for (int y = 0; y < rows; ++y) {
    const int src = excess >= 0 ? y + excess / 2 : std::clamp(y - (-excess) / 2, 0, img.height - 1);
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, src);
  }
  return out;
}

}  // namespace detail

// Collects the iris strips left and right of the pupil on a band of
// block * rows image rows centred on the pupil, places them side by side
// (left first), block-averages, and fits the result to rows x cols.
// Coordinates outside the image are clamped to the nearest edge pixel.
inline IrisTemplate extract_iris_basis(const GrayImage& img, const PupilGeometry& pupil, const IrisBounds& bounds,
                                       const TemplateConfig& cfg = {}) {
  if (cfg.rows < 1 || cfg.cols < 1 || cfg.block < 1) throw InvalidArgument("template dimensions must be positive");

  // Left strip: [left_x, x_cp - r_x); right strip: (x_cp + r_x, right_x].
  const int left_begin = bounds.left_x;
  const int left_end = static_cast<int>(std::ceil(pupil.x_cp - pupil.r_x));
  const int right_begin = static_cast<int>(std::floor(pupil.x_cp + pupil.r_x)) + 1;
  const int right_end = bounds.right_x + 1;
  const int left_w = std::max(0, left_end - left_begin);
  const int right_w = std::max(0, right_end - right_begin);
  if (left_w < cfg.block && right_w < cfg.block)
    throw TemplateError("iris strips are narrower than one quantization block on both sides");

  const int band = cfg.block * cfg.rows;
  const int top = static_cast<int>(round_half_away(pupil.y_cp)) - band / 2;
  GrayImage strip(left_w + right_w, band);
  auto sample = [&](int x, int y) {
    return img.at(std::clamp(x, 0, img.width - 1), std::clamp(y, 0, img.height - 1));
  };
  for (int r = 0; r < band; ++r) {
    for (int i = 0; i < left_w; ++i) strip.at(i, r) = sample(left_begin + i, top + r);
    for (int i = 0; i < right_w; ++i) strip.at(left_w + i, r) = sample(right_begin + i, top + r);
  }

  GrayImage reduced = block_downsample(strip, cfg.block);
  reduced = detail::fit_columns(reduced, cfg.cols);
  reduced = detail::fit_rows(reduced, cfg.rows);

  IrisTemplate t{Matrix(static_cast<std::size_t>(cfg.rows), static_cast<std::size_t>(cfg.cols))};
  for (int y = 0; y < cfg.rows; ++y)
    for (int x = 0; x < cfg.cols; ++x) t.values(y, x) = reduced.at(x, y) / 255.0;
  return t;
}

inline GrayImage template_to_image(const IrisTemplate& t) {
  GrayImage out(static_cast<int>(t.cols()), static_cast<int>(t.rows()));
  for (std::size_t y = 0; y < t.rows(); ++y)
    for (std::size_t x = 0; x < t.cols(); ++x)
      out.at(static_cast<int>(x), static_cast<int>(y)) =
          static_cast<Intensity>(std::clamp(round_half_away(t.values(y, x) * 255.0), 0.0, 255.0));
  return out;
}

}  // namespace irisvd
