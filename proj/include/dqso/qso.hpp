#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqso/errors.hpp"
#include "dqso/simplex.hpp"

namespace dqso {

// Heredity coefficients p_{ij,k} of a quadratic stochastic operator
//
//   (Vx)_k = sum_{i,j} p_{ij,k} x_i x_j.
//
// Only the symmetric half i <= j is stored, densely: for each unordered pair
// the m output coefficients are contiguous, so distribution(i, j) is the
// vector a_ij. All indices are 0-based.
class HeredityTensor {
 public:
  explicit HeredityTensor(std::size_t m) : m_(m), p_(pair_count(m) * m, 0.0) {
    if (m < 2) throw std::invalid_argument("operator dimension must be >= 2");
  }

  static constexpr std::size_t pair_count(std::size_t m) { return m * (m + 1) / 2; }

  std::size_t dim() const { return m_; }

  std::size_t pair_index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * (2 * m_ - i + 1) / 2 + (j - i);
  }

  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return p_[pair_index(i, j) * m_ + k];
  }

  void set(std::size_t i, std::size_t j, std::size_t k, double value) {
    check(i), check(j), check(k);
    p_[pair_index(i, j) * m_ + k] = value;
  }

  // Adds `coeff * x_i x_j` to output k, the way coefficients appear when the
  // operator is written out as polynomials (cross terms carry 2 p_{ij,k}).
  void add_monomial(std::size_t k, std::size_t i, std::size_t j, double coeff) {
    check(i), check(j), check(k);
    p_[pair_index(i, j) * m_ + k] += (i == j) ? coeff : coeff / 2.0;
  }

  std::span<const double> distribution(std::size_t i, std::size_t j) const {
    return {p_.data() + pair_index(i, j) * m_, m_};
  }

  std::span<const double> raw() const { return p_; }

  friend bool operator==(const HeredityTensor&, const HeredityTensor&) = default;

 private:
  void check(std::size_t idx) const {
    if (idx >= m_) throw std::out_of_range("index out of range");
  }

  std::size_t m_;
  std::vector<double> p_;
};

struct ValidationIssue {
  enum class Kind { Negative, NonFinite, RowSum };
  Kind kind;
  std::size_t i, j;
  std::size_t k;  // offending output for Negative/NonFinite; unused for RowSum
  double value;   // the coefficient, or the row sum
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

inline ValidationReport validate(const HeredityTensor& t) {
  ValidationReport r;
  const std::size_t m = t.dim();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      double sum = 0.0;
      bool finite = true;
      for (std::size_t k = 0; k < m; ++k) {
        const double v = t(i, j, k);
        if (!std::isfinite(v)) {
          r.issues.push_back({ValidationIssue::Kind::NonFinite, i, j, k, v});
          finite = false;
        } else if (v < 0.0) {
          r.issues.push_back({ValidationIssue::Kind::Negative, i, j, k, v});
        }
        sum += v;
      }
      if (finite && std::abs(sum - 1.0) > kSumTol)
        r.issues.push_back({ValidationIssue::Kind::RowSum, i, j, 0, sum});
    }
  return r;
}

namespace detail {

// (Vx)_k into out, no validation. Cross terms are doubled once here.
inline void apply_raw(const HeredityTensor& t, std::span<const double> x,
                      std::span<double> out) {
  const std::size_t m = t.dim();
  std::fill(out.begin(), out.end(), 0.0);
  const auto p = t.raw();
  std::size_t row = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j, ++row) {
      const double w = (i == j) ? x[i] * x[i] : 2.0 * x[i] * x[j];
      if (w == 0.0) continue;
      const double* a = p.data() + row * m;
      for (std::size_t k = 0; k < m; ++k) out[k] += a[k] * w;
    }
}

}  // namespace detail

inline SimplexPoint apply(const HeredityTensor& t, const SimplexPoint& x) {
  if (x.dim() != t.dim()) throw DimensionMismatch(t.dim(), x.dim());
  std::vector<double> out(t.dim());
  detail::apply_raw(t, x.coords(), out);
  return SimplexPoint(std::move(out));
}

// Row-major m x m Jacobian: J[k*m + l] = d(Vx)_k / dx_l = 2 sum_i p_{il,k} x_i.
inline std::vector<double> jacobian(const HeredityTensor& t,
                                    std::span<const double> x) {
  const std::size_t m = t.dim();
  std::vector<double> J(m * m, 0.0);
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t i = 0; i < m; ++i) {
      if (x[i] == 0.0) continue;
      const auto a = t.distribution(i, l);
      for (std::size_t k = 0; k < m; ++k) J[k * m + l] += 2.0 * a[k] * x[i];
    }
  return J;
}

// Relabels outputs: the result sends to sigma[k] what t sent to k.
inline HeredityTensor permute_outputs(const HeredityTensor& t,
                                      std::span<const std::size_t> sigma) {
  const std::size_t m = t.dim();
  if (sigma.size() != m) throw DimensionMismatch(m, sigma.size());
  HeredityTensor out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) out.set(i, j, sigma[k], t(i, j, k));
  return out;
}

// True when V is a linear map x -> Ax written quadratically, i.e.
// p_{ij,k} = (p_{ii,k} + p_{jj,k}) / 2 throughout.
inline bool is_linear(const HeredityTensor& t, double tol = 1e-12) {
  const std::size_t m = t.dim();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        if (std::abs(t(i, j, k) - 0.5 * (t(i, i, k) + t(j, j, k))) > tol) return false;
  return true;
}

// Assignment of every index i to the output tau(i) that receives x_i^2.
// Blocks alpha_k = tau^{-1}(k) are disjoint and cover all indices.
class AlphaPartition {
 public:
  explicit AlphaPartition(std::vector<std::size_t> tau) : tau_(std::move(tau)) {
    for (std::size_t v : tau_)
      if (v >= tau_.size())
        throw std::invalid_argument("partition target out of range");
  }

  std::size_t dim() const { return tau_.size(); }
  std::size_t target(std::size_t i) const { return tau_.at(i); }
  std::span<const std::size_t> tau() const { return tau_; }

  std::vector<std::size_t> block(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tau_.size(); ++i)
      if (tau_[i] == k) out.push_back(i);
    return out;
  }

  std::vector<std::vector<std::size_t>> blocks() const {
    std::vector<std::vector<std::size_t>> out(tau_.size());
    for (std::size_t i = 0; i < tau_.size(); ++i) out[tau_[i]].push_back(i);
    return out;
  }

  friend bool operator==(const AlphaPartition&, const AlphaPartition&) = default;

 private:
  std::vector<std::size_t> tau_;
};

inline constexpr double kDiagonalTol = 1e-9;

// Reads the α-partition off the diagonal distributions a_ii, each of which
// must be (within tol) a vertex of the simplex.
inline AlphaPartition extract_alpha(const HeredityTensor& t,
                                    double tol = kDiagonalTol) {
  const std::size_t m = t.dim();
  std::vector<std::size_t> tau(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::optional<std::size_t> unit;
    bool stray = false;
    for (std::size_t k = 0; k < m; ++k) {
      const double v = t(i, i, k);
      if (std::abs(v - 1.0) <= tol) {
        if (unit) throw AmbiguousDiagonal(i);
        unit = k;
      } else if (v > tol) {
        stray = true;
      }
    }
    if (!unit || stray) throw NoUnitDiagonal(i);
    tau[i] = *unit;
  }
  return AlphaPartition(std::move(tau));
}

}  // namespace dqso
