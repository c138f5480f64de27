#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqso/errors.hpp"
#include "dqso/rng.hpp"

namespace dqso {

inline constexpr double kMajorizationTol = 1e-12;
inline constexpr double kNegativeTol = 1e-12;
inline constexpr double kSumTol = 1e-9;

// A point of the standard simplex: nonnegative coordinates summing to one.
//
// Construction clamps coordinates in [-1e-12, 0) to zero and renormalizes
// when the sum is within 1e-9 of one; anything further off is rejected.
class SimplexPoint {
 public:
  explicit SimplexPoint(std::vector<double> coords) : x_(std::move(coords)) {
    if (x_.empty()) throw std::invalid_argument("simplex point needs m >= 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double& v = x_[i];
      if (!std::isfinite(v))
        throw std::invalid_argument("coordinate " + std::to_string(i + 1) +
                                    " is not finite");
      if (v < 0.0) {
        if (v < -kNegativeTol)
          throw std::invalid_argument("coordinate " + std::to_string(i + 1) +
                                      " is negative");
        v = 0.0;
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTol)
      throw std::invalid_argument("coordinates sum to " + std::to_string(sum) +
                                  ", not 1");
    if (sum != 1.0)
      for (double& v : x_) v /= sum;
  }

  static SimplexPoint vertex(std::size_t m, std::size_t k) {
    std::vector<double> v(m, 0.0);
    v.at(k) = 1.0;
    return SimplexPoint(std::move(v));
  }

  static SimplexPoint barycenter(std::size_t m) {
    return SimplexPoint(std::vector<double>(m, 1.0 / static_cast<double>(m)));
  }

  // Uniform on the given support (0-based indices), zero elsewhere.
  static SimplexPoint face_center(std::size_t m,
                                  std::span<const std::size_t> support) {
    std::vector<double> v(m, 0.0);
    for (std::size_t i : support) v.at(i) = 1.0 / static_cast<double>(support.size());
    return SimplexPoint(std::move(v));
  }

  std::size_t dim() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }
  std::span<const double> coords() const { return x_; }
  const std::vector<double>& values() const { return x_; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> x_;
};

inline double max_norm_distance(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_norm_distance(const SimplexPoint& a, const SimplexPoint& b) {
  return max_norm_distance(a.coords(), b.coords());
}

// Nonincreasing rearrangement; ties keep the original index order.
inline std::vector<double> sort_desc(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  std::stable_sort(out.begin(), out.end(), std::greater<>{});
  return out;
}

inline std::vector<double> sort_desc(const SimplexPoint& x) {
  return sort_desc(x.coords());
}

struct MajorizationVerdict {
  bool holds = true;
  double gap = 0.0;
  std::size_t witness_prefix = 1;  // prefix length k in [1, m-1]
};

namespace detail {

inline MajorizationVerdict compare_prefixes(std::span<const double> lower,
                                            std::span<const double> upper) {
  if (lower.size() != upper.size())
    throw DimensionMismatch(lower.size(), upper.size());
  const std::size_t m = lower.size();
  if (m < 2) throw std::invalid_argument("majorization needs m >= 2");

  // Only the first m-1 prefixes matter; the full sums agree by definition.
  auto lo = sort_desc(lower);
  auto up = sort_desc(upper);
  MajorizationVerdict v;
  v.gap = std::numeric_limits<double>::infinity();
  double sl = 0.0, su = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    sl += lo[k];
    su += up[k];
    if (su - sl < v.gap) {
      v.gap = su - sl;
      v.witness_prefix = k + 1;
    }
  }
  v.holds = v.gap >= -kMajorizationTol;
  return v;
}

}  // namespace detail

// Tests lower ≺ upper on raw coordinate vectors.
inline MajorizationVerdict is_majorized(std::span<const double> lower,
                                        std::span<const double> upper) {
  return detail::compare_prefixes(lower, upper);
}

inline MajorizationVerdict is_majorized(const SimplexPoint& x,
                                        const SimplexPoint& y) {
  return detail::compare_prefixes(x.coords(), y.coords());
}

// Tightest prefix-sum margin of upper over lower; negative means lower is
// not majorized by upper.
inline double majorization_gap(std::span<const double> lower,
                               std::span<const double> upper) {
  return detail::compare_prefixes(lower, upper).gap;
}

inline double majorization_gap(const SimplexPoint& lower,
                               const SimplexPoint& upper) {
  return majorization_gap(lower.coords(), upper.coords());
}

// Flat Dirichlet samples via normalized exponential draws.
inline std::vector<SimplexPoint> sample_uniform(std::size_t m, std::size_t n,
                                                std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("sample_uniform needs m >= 2");
  Rng rng(seed);
  std::vector<SimplexPoint> out;
  out.reserve(n);
  std::vector<double> v(m);
  for (std::size_t s = 0; s < n; ++s) {
    double sum = 0.0;
    for (double& e : v) sum += (e = rng.exponential());
    for (double& e : v) e /= sum;
    out.emplace_back(v);
  }
  return out;
}

// Euclidean projection onto the simplex (sort-and-threshold).
inline std::vector<double> project_to_simplex(std::span<const double> y) {
  std::vector<double> u = sort_desc(y);
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::max(y[i] - theta, 0.0);
  return out;
}

// A T-transform on coordinates i and j:
//   z_i <- (1 - lambda) z_i + lambda z_j,  z_j <- (1 - lambda) z_j + lambda z_i.
// lambda = 1/2 averages the two coordinates, lambda = 1 swaps them.
struct Transfer {
  std::size_t i = 0;
  std::size_t j = 0;
  double lambda = 0.0;
};

inline void apply_transfer(const Transfer& t, std::span<double> z) {
  const double zi = z[t.i], zj = z[t.j];
  z[t.i] = (1.0 - t.lambda) * zi + t.lambda * zj;
  z[t.j] = (1.0 - t.lambda) * zj + t.lambda * zi;
}

inline std::vector<double> apply_chain(std::span<const Transfer> chain,
                                       std::span<const double> y) {
  std::vector<double> z(y.begin(), y.end());
  for (const auto& t : chain) apply_transfer(t, z);
  return z;
}

// Builds a chain of T-transforms carrying y to x, given x ≺ y.
//
// Phase 1 rearranges y by swaps (lambda = 1) so that its values are ordered
// like x; phase 2 is the classic two-index step on that common ordering:
// with ranks r, take the last rank j where z exceeds x and the first later
// rank k where z falls short, and move min(z_j - x_j, x_k - z_k) from j to k.
// Each phase-2 step settles one rank for good, so the chain has at most m-1
// transfers when x and y are similarly ordered and at most 2(m-1) otherwise.
// Every intermediate point z satisfies x ≺ z ≺ y.
inline std::vector<Transfer> t_transform_chain(const SimplexPoint& x,
                                               const SimplexPoint& y) {
  const std::size_t m = x.dim();
  if (y.dim() != m) throw DimensionMismatch(m, y.dim());
  if (!is_majorized(x, y).holds)
    throw std::invalid_argument("t_transform_chain: x is not majorized by y");

  auto order_desc = [m](std::span<const double> v) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
  };
  const auto pos = order_desc(x.coords());   // pos[r]: position of rank r in x
  const auto src = order_desc(y.coords());   // src[r]: position of rank r in y

  std::vector<Transfer> chain;
  std::vector<double> z(y.values());
  auto push = [&](Transfer t) {
    apply_transfer(t, z);
    chain.push_back(t);
  };

  // Phase 1: move y's rank-r value to position pos[r].
  std::vector<std::size_t> holder(m), where(m);  // position -> y index, inverse
  std::iota(holder.begin(), holder.end(), std::size_t{0});
  std::iota(where.begin(), where.end(), std::size_t{0});
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t q = pos[r], from = where[src[r]];
    if (from == q) continue;
    if (z[q] != z[from]) push({q, from, 1.0});
    std::swap(holder[q], holder[from]);
    where[holder[q]] = q;
    where[holder[from]] = from;
  }

  // Phase 2 on the common ordering.
  constexpr double kSettled = 1e-15;
  for (std::size_t step = 0; step < m; ++step) {
    std::optional<std::size_t> j;
    for (std::size_t r = 0; r < m; ++r)
      if (z[pos[r]] - x[pos[r]] > kSettled) j = r;
    if (!j) break;
    std::optional<std::size_t> k;
    for (std::size_t r = *j + 1; r < m && !k; ++r)
      if (x[pos[r]] - z[pos[r]] > kSettled) k = r;
    if (!k) break;  // only rounding residue is left
    const std::size_t a = pos[*j], b = pos[*k];
    const double delta = std::min(z[a] - x[a], x[b] - z[b]);
    const double lambda = std::clamp(delta / (z[a] - z[b]), 0.0, 1.0);
    push({a, b, lambda});
    // Snap the settled coordinate so rounding cannot reopen it.
    if (std::abs(z[a] - x[a]) <= 4 * kSettled) z[a] = x[a];
    if (std::abs(z[b] - x[b]) <= 4 * kSettled) z[b] = x[b];
  }
  return chain;
}

}  // namespace dqso
