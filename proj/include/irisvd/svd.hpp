#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "irisvd/error.hpp"
#include "irisvd/matrix.hpp"

namespace irisvd {

// Thin SVD: a = u * diag(s) * v^T with r = min(rows, cols), u rows x r and v
// cols x r, both with orthonormal columns, s descending and nonnegative.
struct SvdFactorization {
  Matrix u;
  std::vector<double> s;
  Matrix v;
  int sweeps = 0;
};

struct SvdOptions {
  double tolerance = 1e-12;  // max normalized column inner product at convergence
  int max_sweeps = 60;
};

namespace detail {

// Orthonormalizes basis columns that carry no signal (zero singular value)
// against the columns that do, so u keeps orthonormal columns for rank-deficient input.
inline void complete_basis(std::vector<std::vector<double>>& cols, const std::vector<bool>& valid) {
  const std::size_t m = cols.empty() ? 0 : cols[0].size();
  std::vector<std::size_t> done;
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (valid[j]) done.push_back(j);
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (valid[j]) continue;
    while (candidate < m) {
      std::vector<double> e(m, 0.0);
      e[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k : done) {
          const double d = std::inner_product(e.begin(), e.end(), cols[k].begin(), 0.0);
          for (std::size_t i = 0; i < m; ++i) e[i] -= d * cols[k][i];
        }
      const double norm = std::sqrt(std::inner_product(e.begin(), e.end(), e.begin(), 0.0));
      if (norm > 1e-6) {
        for (auto& x : e) x /= norm;
        cols[j] = std::move(e);
        done.push_back(j);
        break;
      }
    }
  }
}

inline SvdFactorization one_sided_jacobi(const Matrix& a, const SvdOptions& opt) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  // Column-major working copies of a and v.
  std::vector<std::vector<double>> w(n, std::vector<double>(m));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) w[j][i] = a(i, j);
    v[j][j] = 1.0;
  }

  auto dot = [](const std::vector<double>& x, const std::vector<double>& y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  };
  auto rotate = [](std::vector<double>& x, std::vector<double>& y, double c, double s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      const double yi = y[i];
      x[i] = c * xi - s * yi;
      y[i] = s * xi + c * yi;
    }
  };

  constexpr double eps = std::numeric_limits<double>::epsilon();
  int sweep = 0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(w[p], w[p]);
        const double beta = dot(w[q], w[q]);
        const double gamma = dot(w[p], w[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double scaled = std::abs(gamma) / std::sqrt(alpha * beta);
        worst = std::max(worst, scaled);
        if (scaled <= eps) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(w[p], w[q], c, s);
        rotate(v[p], v[q], c, s);
      }
    }
    if (worst < opt.tolerance) {
      ++sweep;
      break;
    }
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(dot(w[j], w[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

  const double smax = n ? sv[order[0]] : 0.0;
  std::vector<std::vector<double>> ucols(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> vcols(n);
  std::vector<bool> valid(n, false);
  SvdFactorization f;
  f.s.resize(n);
  f.sweeps = sweep;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    f.s[k] = sv[j];
    vcols[k] = v[j];
    if (sv[j] > 0.0 && sv[j] > 1e-14 * smax) {
      for (std::size_t i = 0; i < m; ++i) ucols[k][i] = w[j][i] / sv[j];
      valid[k] = true;
    }
  }
  complete_basis(ucols, valid);

  // Sign convention: the largest-magnitude entry of each v column is nonnegative.
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(vcols[k][i]) > std::abs(vcols[k][arg])) arg = i;
    if (vcols[k][arg] < 0.0) {
      for (auto& x : vcols[k]) x = -x;
      for (auto& x : ucols[k]) x = -x;
    }
  }

  f.u = Matrix(m, n);
  f.v = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) f.u(i, k) = ucols[k][i];
    for (std::size_t i = 0; i < n; ++i) f.v(i, k) = vcols[k][i];
  }
  return f;
}

}  // namespace detail

// One-sided (Hestenes) Jacobi SVD. Wide input is factorized through its
// transpose and the factors are swapped back.
inline SvdFactorization svd_factorize(const Matrix& a, const SvdOptions& opt = {}) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("svd_factorize: empty matrix");
  for (double x : a.data())
    if (!std::isfinite(x)) throw InvalidArgument("svd_factorize: matrix has non-finite entries");
  if (a.rows() >= a.cols()) return detail::one_sided_jacobi(a, opt);
  SvdFactorization f = detail::one_sided_jacobi(a.transposed(), opt);
  std::swap(f.u, f.v);
  return f;
}

inline Matrix reconstruct(const SvdFactorization& f) {
  Matrix us = f.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= f.s[k];
  return us * f.v.transposed();
}

struct FeatureVector {
  std::vector<double> values;
  std::size_t k() const noexcept { return values.size(); }
};

inline FeatureVector feature_vector(std::span<const double> singular_values, std::size_t k) {
  if (k < 1 || k > singular_values.size())
    throw InvalidArgument("feature_vector: k must lie in [1, " + std::to_string(singular_values.size()) + "]");
  return FeatureVector{std::vector<double>(singular_values.begin(), singular_values.begin() + static_cast<long>(k))};
}

inline FeatureVector feature_vector(const SvdFactorization& f, std::size_t k) { return feature_vector(f.s, k); }

// Share of the squared spectrum kept by the first k singular values.
inline double truncation_energy(std::span<const double> s, std::size_t k) {
  if (k < 1 || k > s.size()) throw InvalidArgument("truncation_energy: k out of range");
  double head = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    total += s[i] * s[i];
    if (i < k) head += s[i] * s[i];
  }
  return total == 0.0 ? 1.0 : head / total;
}

inline double truncation_energy(const SvdFactorization& f, std::size_t k) { return truncation_energy(f.s, k); }

}  // namespace irisvd
