#pragma once

// Test-only oracles for the segmentation module. They share nothing with the
// union-find labeling or the Moore tracer beyond the BinaryImage container.

#include <set>
#include <vector>

#include "irisvd/segmentation.hpp"

namespace oracle {

// Recursive 8-connected flood fill. Returns a label per pixel (0 = background),
// numbered in row-major first-encounter order.
inline void fill(const irisvd::BinaryImage& bin, std::vector<int>& labels, int x, int y, int label) {
  if (!bin.set(x, y) || labels[static_cast<std::size_t>(y) * bin.width + x] != 0) return;
  labels[static_cast<std::size_t>(y) * bin.width + x] = label;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      if (dx || dy) fill(bin, labels, x + dx, y + dy, label);
}

inline std::vector<int> flood_labels(const irisvd::BinaryImage& bin) {
  std::vector<int> labels(bin.bits.size(), 0);
  int next = 0;
  for (int y = 0; y < bin.height; ++y)
    for (int x = 0; x < bin.width; ++x)
      if (bin.at(x, y) && labels[static_cast<std::size_t>(y) * bin.width + x] == 0) fill(bin, labels, x, y, ++next);
  return labels;
}

// Pixels of the labelled set with at least one 4-neighbour outside it.
inline std::set<irisvd::Point> boundary_4(const std::set<irisvd::Point>& region) {
  std::set<irisvd::Point> out;
  for (const auto& p : region) {
    const irisvd::Point n[4] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
    for (const auto& q : n)
      if (!region.count(q)) {
        out.insert(p);
        break;
      }
  }
  return out;
}

// Centroid of the largest flood-filled region (lowest label on ties).
struct LargestRegion {
  double x = 0.0, y = 0.0;
  std::size_t area = 0;
  int label = 0;
};

inline LargestRegion largest_region(const irisvd::BinaryImage& bin, std::size_t min_area) {
  const auto labels = flood_labels(bin);
  int n = 0;
  for (int l : labels) n = std::max(n, l);
  std::vector<std::size_t> area(n + 1, 0);
  std::vector<double> sx(n + 1, 0.0), sy(n + 1, 0.0);
  for (int y = 0; y < bin.height; ++y)
    for (int x = 0; x < bin.width; ++x) {
      const int l = labels[static_cast<std::size_t>(y) * bin.width + x];
      if (!l) continue;
      ++area[l];
      sx[l] += x;
      sy[l] += y;
    }
  LargestRegion best;
  for (int l = 1; l <= n; ++l)
    if (area[l] >= min_area && area[l] > best.area) best = {sx[l] / area[l], sy[l] / area[l], area[l], l};
  return best;
}

}  // namespace oracle
