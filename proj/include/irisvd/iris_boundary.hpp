#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "irisvd/error.hpp"
#include "irisvd/image.hpp"
#include "irisvd/segmentation.hpp"

namespace irisvd {

struct ScanProfile {
  int y = 0;
  std::vector<Intensity> intensities;  // one entry per image column
};

enum class Side { left, right };

struct IrisBounds {
  int left_x = 0;
  int right_x = 0;
  bool left_fallback = false;
  bool right_fallback = false;
};

struct EdgeConfig {
  int window = 5;
  int jump = 25;
  int pupil_margin = 2;            // columns skipped past the pupil edge before the first window
  double default_annulus_width = 0.0;  // <= 0 means 2 * max(r_x, r_y)
};

// The image row through the pupil centre, linearly stretched over its own min/max.
// A flat row yields an all-zero profile.
inline ScanProfile scanline(const GrayImage& img, const PupilGeometry& pupil) {
  const double ry = round_half_away(pupil.y_cp);
  if (!std::isfinite(ry) || ry < 0 || ry >= img.height)
    throw InvalidGeometry("scanline: pupil centre row outside the image");
  ScanProfile prof;
  prof.y = static_cast<int>(ry);
  const auto row = img.row(prof.y);
  const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  prof.intensities.assign(row.size(), 0);
  if (*lo < *hi)
    std::transform(row.begin(), row.end(), prof.intensities.begin(),
                   [lo = *lo, hi = *hi](Intensity p) { return stretch_value(p, lo, hi); });
  return prof;
}

namespace detail {

inline double window_mean(std::span<const Intensity> v, int first, int count) {
  double s = 0.0;
  for (int i = 0; i < count; ++i) s += v[static_cast<std::size_t>(first + i)];
  return s / count;
}

}  // namespace detail

// Walks outward from the pupil edge and returns the first column where the mean
// of the `window` pixels beyond the column exceeds the mean of the `window`
// pixels before it by at least `jump`. When several consecutive columns
// qualify, the one with the largest rise is returned (first on ties).
inline int detect_edge(const ScanProfile& profile, const PupilGeometry& pupil, Side side, int window = 5,
                       int jump = 25, int pupil_margin = 2) {
  if (window < 1) throw InvalidArgument("detect_edge: window must be at least 1");
  if (jump <= 0) throw InvalidArgument("detect_edge: jump must be positive");
  if (pupil_margin < 0) throw InvalidArgument("detect_edge: pupil margin must be nonnegative");
  const std::span<const Intensity> v(profile.intensities);
  const int width = static_cast<int>(v.size());

  // rise(c): outward window mean minus inward window mean around column c.
  auto rise = [&](int c) -> std::optional<double> {
    if (side == Side::right) {
      if (c - window < 0 || c + window > width) return std::nullopt;
      return detail::window_mean(v, c, window) - detail::window_mean(v, c - window, window);
    }
    if (c - window + 1 < 0 || c + window >= width) return std::nullopt;
    return detail::window_mean(v, c - window + 1, window) - detail::window_mean(v, c + 1, window);
  };

  const int step = side == Side::right ? 1 : -1;
  // First column whose inward window lies entirely outside the pupil span.
  int c = side == Side::right
              ? static_cast<int>(std::floor(pupil.x_cp + pupil.r_x)) + 1 + pupil_margin + window
              : static_cast<int>(std::ceil(pupil.x_cp - pupil.r_x)) - 1 - pupil_margin - window;
  for (; c >= 0 && c < width; c += step) {
    const auto r = rise(c);
    if (!r) break;  // outward window ran off the image
    if (*r < jump) continue;
    int best = c;
    double best_rise = *r;
    for (int n = c + step; n >= 0 && n < width; n += step) {
      const auto rn = rise(n);
      if (!rn || *rn < jump) break;
      if (*rn > best_rise) {
        best_rise = *rn;
        best = n;
      }
    }
    return best;
  }
  throw EdgeNotFound();
}

// Left and right iris/sclera columns on the row through the pupil centre. A
// side whose edge is not found mirrors the other side's annulus width; if both
// fail the configured default width is used. Fallback sides are flagged.
inline IrisBounds iris_bounds(const GrayImage& img, const PupilGeometry& pupil, const EdgeConfig& cfg = {}) {
  const ScanProfile prof = scanline(img, pupil);
  auto find = [&](Side s) -> std::optional<int> {
    try {
      return detect_edge(prof, pupil, s, cfg.window, cfg.jump, cfg.pupil_margin);
    } catch (const EdgeNotFound&) {
      return std::nullopt;
    }
  };
  const auto left = find(Side::left);
  const auto right = find(Side::right);

  const double inner_left = pupil.x_cp - pupil.r_x;
  const double inner_right = pupil.x_cp + pupil.r_x;
  double annulus = cfg.default_annulus_width > 0 ? cfg.default_annulus_width : 2.0 * std::max(pupil.r_x, pupil.r_y);

  IrisBounds b;
  b.left_fallback = !left.has_value();
  b.right_fallback = !right.has_value();
  if (left && !right) annulus = inner_left - *left;
  if (right && !left) annulus = *right - inner_right;

  const int last = img.width - 1;
  b.left_x = left ? *left : static_cast<int>(round_half_away(inner_left - annulus));
  b.right_x = right ? *right : static_cast<int>(round_half_away(inner_right + annulus));
  b.left_x = std::clamp(b.left_x, 0, last);
  b.right_x = std::clamp(b.right_x, 0, last);
  return b;
}

// Copy of the image with the scanline and both detected edge columns drawn at 255.
inline GrayImage annotate_scanline(const GrayImage& img, const PupilGeometry& pupil, const IrisBounds& b) {
  GrayImage out = img;
  const int y = std::clamp(static_cast<int>(round_half_away(pupil.y_cp)), 0, img.height - 1);
  for (int x = 0; x < img.width; ++x) out.at(x, y) = 255;
  for (int yy = 0; yy < img.height; ++yy) {
    out.at(b.left_x, yy) = 255;
    out.at(b.right_x, yy) = 255;
  }
  return out;
}

}  // namespace irisvd
