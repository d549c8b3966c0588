#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "irisvd/error.hpp"
#include "irisvd/image.hpp"

namespace irisvd {

struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, each 0 or 1

  BinaryImage() = default;
  BinaryImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw InvalidArgument("image dimensions must be positive");
    bits.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool set(int x, int y) const { return contains(x, y) && at(x, y) != 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }

  bool operator==(const BinaryImage&) const = default;
};

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

struct BoundingBox {
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  bool contains(Point p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

struct Region {
  int label = 0;
  std::size_t area = 0;
  std::vector<Point> pixels;  // row-major order
  BoundingBox bbox;
};

// Freeman directions, y pointing down: 0 = east, counterclockwise on screen.
inline constexpr std::array<Point, 8> kFreemanStep{{{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

struct ChainCode {
  Point start;
  std::vector<std::uint8_t> moves;

  // Pixels visited when replaying the moves from start; includes start, and
  // the final position once more when the chain is closed.
  std::vector<Point> replay() const {
    std::vector<Point> path{start};
    Point p = start;
    for (auto m : moves) {
      p.x += kFreemanStep[m].x;
      p.y += kFreemanStep[m].y;
      path.push_back(p);
    }
    return path;
  }
  bool closed() const {
    const auto path = replay();
    return path.back() == start;
  }
};

struct PupilGeometry {
  double x_cp = 0.0;
  double y_cp = 0.0;
  double r_x = 0.0;
  double r_y = 0.0;
  std::size_t area = 0;
};

struct SegmentationConfig {
  int threshold = 70;
  std::size_t min_area = 2500;
};

inline BinaryImage threshold_dark(const GrayImage& img, int t = 70) {
  if (t < 0 || t > 255) throw InvalidArgument("threshold must lie in [0, 255]");
  BinaryImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.bits[i] = img.pixels[i] <= t ? 1 : 0;
  return out;
}

namespace detail {

struct DisjointSet {
  std::vector<int> parent;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

}  // namespace detail

// Two-pass union-find labeling with 8-connectivity. Labels run 1..n in the
// order each region is first met by a row-major scan.
inline std::vector<Region> label_components_8(const BinaryImage& bin) {
  const int w = bin.width;
  const int h = bin.height;
  std::vector<int> provisional(bin.bits.size(), -1);
  detail::DisjointSet sets;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!bin.at(x, y)) continue;
      // Already-visited neighbours: W, NW, N, NE.
      const std::array<Point, 4> back{{{x - 1, y}, {x - 1, y - 1}, {x, y - 1}, {x + 1, y - 1}}};
      int label = -1;
      for (const auto& n : back) {
        if (!bin.set(n.x, n.y)) continue;
        const int other = provisional[static_cast<std::size_t>(n.y) * w + n.x];
        if (label < 0) label = other;
        else sets.unite(label, other);
      }
      if (label < 0) label = sets.make();
      provisional[static_cast<std::size_t>(y) * w + x] = label;
    }
  }

  std::vector<int> final_label(sets.parent.size(), 0);
  std::vector<Region> regions;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = provisional[static_cast<std::size_t>(y) * w + x];
      if (p < 0) continue;
      const int root = sets.find(p);
      if (final_label[root] == 0) {
        regions.push_back(Region{static_cast<int>(regions.size()) + 1, 0, {}, BoundingBox{x, y, x, y}});
        final_label[root] = regions.back().label;
      }
      Region& r = regions[final_label[root] - 1];
      r.pixels.push_back({x, y});
      r.bbox.x_min = std::min(r.bbox.x_min, x);
      r.bbox.x_max = std::max(r.bbox.x_max, x);
      r.bbox.y_max = std::max(r.bbox.y_max, y);
    }
  }
  for (auto& r : regions) r.area = r.pixels.size();
  return regions;
}

// Clears every region whose area is strictly below min_area.
inline BinaryImage filter_small_regions(std::span<const Region> regions, const BinaryImage& bin,
                                        std::size_t min_area = 2500) {
  BinaryImage out = bin;
  for (const auto& r : regions) {
    if (r.area >= min_area) continue;
    for (const auto& p : r.pixels) out.at(p.x, p.y) = 0;
  }
  return out;
}

// Moore-neighbour boundary tracing from the topmost-then-leftmost pixel of the
// region, stopping when the start pixel is re-entered with the initial move.
inline ChainCode trace_boundary(const BinaryImage& bin, const Region& region) {
  if (region.pixels.empty()) throw InvalidArgument("trace_boundary: empty region");

  // Membership mask over the bounding box padded by one pixel on each side.
  const BoundingBox& bb = region.bbox;
  const int mw = bb.x_max - bb.x_min + 3;
  const int mh = bb.y_max - bb.y_min + 3;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(mw) * mh, 0);
  auto member = [&](Point p) {
    const int mx = p.x - bb.x_min + 1;
    const int my = p.y - bb.y_min + 1;
    if (mx < 0 || my < 0 || mx >= mw || my >= mh) return false;
    return mask[static_cast<std::size_t>(my) * mw + mx] != 0;
  };
  for (const auto& p : region.pixels) {
    if (!bin.set(p.x, p.y)) throw InvalidArgument("trace_boundary: region pixel is not set in the image");
    mask[static_cast<std::size_t>(p.y - bb.y_min + 1) * mw + (p.x - bb.x_min + 1)] = 1;
  }

  ChainCode chain;
  chain.start = *std::min_element(region.pixels.begin(), region.pixels.end(),
                                  [](Point a, Point b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });

  auto next_move = [&](Point at, int last_dir) -> int {
    const int first = (last_dir % 2 == 0) ? (last_dir + 7) % 8 : (last_dir + 6) % 8;
    for (int i = 0; i < 8; ++i) {
      const int d = (first + i) % 8;
      if (member({at.x + kFreemanStep[d].x, at.y + kFreemanStep[d].y})) return d;
    }
    return -1;
  };

  Point at = chain.start;
  int dir = 7;
  const std::size_t limit = 4 * region.pixels.size() + 8;
  while (true) {
    const int d = next_move(at, dir);
    if (d < 0) break;  // isolated pixel
    if (at == chain.start && !chain.moves.empty() && d == chain.moves.front()) break;
    chain.moves.push_back(static_cast<std::uint8_t>(d));
    at = {at.x + kFreemanStep[d].x, at.y + kFreemanStep[d].y};
    dir = d;
    if (chain.moves.size() > limit) throw Error("trace_boundary: chain failed to close");
  }
  return chain;
}

namespace detail {

inline const Region* largest_region(std::span<const Region> regions, std::size_t min_area) {
  const Region* best = nullptr;
  for (const auto& r : regions) {
    if (r.area < min_area) continue;
    if (best == nullptr || r.area > best->area) best = &r;  // ties keep the lower label
  }
  return best;
}

}  // namespace detail

inline PupilGeometry geometry_of(const Region& r) {
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& p : r.pixels) {
    sx += p.x;
    sy += p.y;
  }
  PupilGeometry g;
  g.area = r.area;
  g.x_cp = sx / static_cast<double>(r.area);
  g.y_cp = sy / static_cast<double>(r.area);

  const int row = static_cast<int>(round_half_away(g.y_cp));
  const int col = static_cast<int>(round_half_away(g.x_cp));
  // Run of region pixels through the centroid; if the centroid pixel is not a
  // member (non-convex region) fall back to the member count on that line.
  std::vector<int> row_xs;
  std::vector<int> col_ys;
  for (const auto& p : r.pixels) {
    if (p.y == row) row_xs.push_back(p.x);
    if (p.x == col) col_ys.push_back(p.y);
  }
  auto run_through = [](std::vector<int>& coords, int through) -> double {
    if (coords.empty()) return 1.0;
    std::sort(coords.begin(), coords.end());
    auto it = std::find(coords.begin(), coords.end(), through);
    if (it == coords.end()) return static_cast<double>(coords.size());
    auto lo = it;
    while (lo != coords.begin() && *(lo - 1) == *lo - 1) --lo;
    auto hi = it;
    while (hi + 1 != coords.end() && *(hi + 1) == *hi + 1) ++hi;
    return static_cast<double>(*hi - *lo + 1);
  };
  g.r_x = run_through(row_xs, col) / 2.0;
  g.r_y = run_through(col_ys, row) / 2.0;
  return g;
}

// Picks the largest region of at least min_area pixels (lowest label on ties)
// and reports its centroid and half run lengths through the centroid.
inline PupilGeometry pupil_geometry(const BinaryImage& bin, std::size_t min_area = 2500) {
  const auto regions = label_components_8(bin);
  const Region* best = detail::largest_region(regions, min_area);
  if (best == nullptr) throw PupilNotFound();
  return geometry_of(*best);
}

struct SegmentationResult {
  BinaryImage thresholded;
  BinaryImage filtered;
  PupilGeometry pupil;
  ChainCode boundary;
};

inline SegmentationResult segment_pupil(const GrayImage& img, const SegmentationConfig& cfg = {}) {
  SegmentationResult res;
  res.thresholded = threshold_dark(img, cfg.threshold);
  const auto regions = label_components_8(res.thresholded);
  res.filtered = filter_small_regions(regions, res.thresholded, cfg.min_area);
  const Region* best = detail::largest_region(regions, cfg.min_area);
  if (best == nullptr) throw PupilNotFound();
  res.pupil = geometry_of(*best);
  res.boundary = trace_boundary(res.filtered, *best);
  return res;
}

inline GrayImage to_gray(const BinaryImage& bin) {
  GrayImage out(bin.width, bin.height);
  for (std::size_t i = 0; i < bin.bits.size(); ++i) out.pixels[i] = bin.bits[i] ? 0 : 255;
  return out;
}

}  // namespace irisvd
