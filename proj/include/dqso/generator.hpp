#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqso/dissipativity.hpp"
#include "dqso/errors.hpp"
#include "dqso/qso.hpp"
#include "dqso/rng.hpp"

namespace dqso {

struct GeneratorSpec {
  std::size_t m = 3;
  AlphaPartition partition{std::vector<std::size_t>{0, 0, 0}};
  std::uint64_t seed = 0;
  std::size_t max_rejections = 100;
  CheckOptions check{};  // seed field is overridden per candidate
};

struct GenerationResult {
  HeredityTensor tensor;
  std::size_t attempts = 0;
  std::size_t rejections = 0;
};

// One candidate inside the envelope of the necessary conditions:
//   p_{ii,tau(i)} = 1;
//   tau(i) != tau(j): a_ij = (e_tau(i) + e_tau(j)) / 2  (both halves pinned);
//   tau(i) == tau(j) = k0: p_{ij,k0} ~ U[1/2, 1], remainder on one uniformly
//   chosen other output.
inline HeredityTensor sample_candidate(const AlphaPartition& alpha, Rng& rng) {
  const std::size_t m = alpha.dim();
  HeredityTensor t(m);
  for (std::size_t i = 0; i < m; ++i) t.set(i, i, alpha.target(i), 1.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const std::size_t ki = alpha.target(i), kj = alpha.target(j);
      if (ki != kj) {
        t.set(i, j, ki, 0.5);
        t.set(i, j, kj, 0.5);
        continue;
      }
      const double p = rng.uniform(0.5, 1.0);
      std::size_t other = rng.index(m - 1);
      if (other >= ki) ++other;
      t.set(i, j, ki, p);
      t.set(i, j, other, 1.0 - p);
    }
  return t;
}

// Rejection sampler: candidates are drawn by sample_candidate and kept only
// if check_dissipative finds no violation. At most 1 + max_rejections
// candidates are tried.
inline GenerationResult generate(const GeneratorSpec& spec) {
  if (spec.partition.dim() != spec.m) throw DimensionMismatch(spec.m, spec.partition.dim());
  CheckOptions check = spec.check;
  for (std::size_t attempt = 0; attempt <= spec.max_rejections; ++attempt) {
    Rng rng(derive_seed(spec.seed, 2 * attempt));
    HeredityTensor t = sample_candidate(spec.partition, rng);
    check.seed = derive_seed(spec.seed, 2 * attempt + 1);
    const auto verdict = check_dissipative(t, check);
    if (verdict.status == DissipativityVerdict::Status::NoViolationFound)
      return {std::move(t), attempt + 1, attempt};
  }
  throw BudgetExhausted(spec.max_rejections + 1, spec.max_rejections + 1);
}

namespace detail {

struct Term {
  std::size_t out, i, j;  // 1-based, as the operator is written out
  double coeff = 1.0;
};

inline HeredityTensor from_terms(std::size_t m, std::initializer_list<Term> terms) {
  HeredityTensor t(m);
  for (const auto& term : terms) t.add_monomial(term.out - 1, term.i - 1, term.j - 1, term.coeff);
  return t;
}

}  // namespace detail

// Quadratic form of the linear map x -> Ax on the simplex, obtained by
// multiplying by sum_i x_i = 1: p_{ij,k} = (A_ki + A_kj) / 2.
// `columns[i]` is A e_i.
inline HeredityTensor embed_linear(const std::vector<std::vector<double>>& columns) {
  const std::size_t m = columns.size();
  HeredityTensor t(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        t.set(i, j, k, 0.5 * (columns[i].at(k) + columns[j].at(k)));
  return t;
}

inline HeredityTensor identity_operator(std::size_t m) {
  std::vector<std::vector<double>> cols(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) cols[i][i] = 1.0;
  return embed_linear(cols);
}

// All squares go to output 1; the three cross terms split evenly.
inline HeredityTensor basic_example() {
  using detail::Term;
  return detail::from_terms(3, {
      Term{1, 1, 1}, Term{1, 2, 2}, Term{1, 3, 3}, Term{1, 1, 2}, Term{1, 1, 3}, Term{1, 2, 3},
      Term{2, 1, 2}, Term{2, 1, 3},
      Term{3, 2, 3},
  });
}

inline HeredityTensor example1() {
  using detail::Term;
  return detail::from_terms(3, {
      Term{1, 2, 3},
      Term{2, 1, 1}, Term{2, 1, 2}, Term{2, 1, 3},
      Term{3, 2, 2}, Term{3, 3, 3}, Term{3, 1, 2}, Term{3, 1, 3}, Term{3, 2, 3},
  });
}

// The four-dimensional example exactly as originally written. Not a valid
// operator: x_4^2 appears in no output and the x_2 x_4 term is only half
// accounted for.
inline HeredityTensor example2_as_printed(double a, double b) {
  using detail::Term;
  return detail::from_terms(4, {
      Term{1, 1, 1}, Term{1, 1, 2}, Term{1, 1, 3}, Term{1, 1, 4, a}, Term{1, 2, 4},
      Term{2, 3, 3}, Term{2, 1, 3}, Term{2, 2, 3}, Term{2, 3, 4, b},
      Term{3, 2, 2}, Term{3, 1, 2}, Term{3, 2, 3},
      Term{4, 1, 4, 2.0 - a}, Term{4, 3, 4, 2.0 - b},
  });
}

// Repaired four-dimensional example with alpha_1 = {1, 4}, alpha_2 = {3},
// alpha_3 = {2}. Relative to the printed version: x_4^2 goes to output 1,
// x_2 x_4 is split between outputs 1 and 3, and the x_3 x_4 remainder
// (2 - b) goes to output 1 instead of output 4. The necessary conditions then
// hold for 1 <= a <= 2 and b = 1 only.
inline HeredityTensor example2(double a = 1.5, double b = 1.0) {
  using detail::Term;
  return detail::from_terms(4, {
      Term{1, 1, 1}, Term{1, 4, 4}, Term{1, 1, 2}, Term{1, 1, 3}, Term{1, 1, 4, a},
      Term{1, 2, 4}, Term{1, 3, 4, 2.0 - b},
      Term{2, 3, 3}, Term{2, 1, 3}, Term{2, 2, 3}, Term{2, 3, 4, b},
      Term{3, 2, 2}, Term{3, 1, 2}, Term{3, 2, 3}, Term{3, 2, 4},
      Term{4, 1, 4, 2.0 - a},
  });
}

inline HeredityTensor example3() {
  using detail::Term;
  return detail::from_terms(3, {
      Term{1, 2, 2}, Term{1, 3, 3}, Term{1, 1, 2}, Term{1, 1, 3}, Term{1, 2, 3},
      Term{2, 2, 3},
      Term{3, 1, 1}, Term{3, 1, 2}, Term{3, 1, 3},
  });
}

// (x1, x2, x3) -> (x1 + x2, x3, 0): linear, dissipative, not a permutation.
inline HeredityTensor linear_face_example() {
  return embed_linear({{1, 0, 0}, {1, 0, 0}, {0, 1, 0}});
}

// (Vx)_1 = x1^2 + 2 x1 x2, (Vx)_2 = x2^2: Volterra and not dissipative.
inline HeredityTensor volterra_example() {
  using detail::Term;
  return detail::from_terms(2, {Term{1, 1, 1}, Term{1, 1, 2, 2.0}, Term{2, 2, 2}});
}

struct CatalogEntry {
  std::string name;
  std::string description;
  HeredityTensor tensor;
};

inline std::map<std::string, CatalogEntry> catalog() {
  std::map<std::string, CatalogEntry> c;
  auto add = [&](std::string name, std::string description, HeredityTensor t) {
    c.emplace(name, CatalogEntry{name, std::move(description), std::move(t)});
  };
  add("basic", "m=3; every square goes to output 1, cross terms split evenly; fixed point e_1",
      basic_example());
  add("example1", "m=3; tau = (2,3,3); unique fixed point (0,0,1)", example1());
  add("example2",
      "m=4; a=1.5, b=1; repaired: x4^2 and half of x2x4 added, x3x4 remainder moved to "
      "output 1; fixed points (1-2l, l, l, 0)",
      example2());
  add("example3", "m=3; tau = (3,1,1); unique fixed point (1/2,0,1/2)", example3());
  add("linear-face", "m=3; linear map (x1+x2, x3, 0) written quadratically",
      linear_face_example());
  add("volterra", "m=2; Volterra operator x1^2 + 2x1x2, x2^2; not dissipative",
      volterra_example());
  return c;
}

inline constexpr std::size_t kMaxEnumerationDim = 8;

// Visits every map tau: {0..m-1} -> {0..m-1} in lexicographic order.
inline void for_each_partition(std::size_t m, const std::function<void(const AlphaPartition&)>& fn) {
  if (m == 0 || m > kMaxEnumerationDim)
    throw std::invalid_argument("partition enumeration supports 1 <= m <= 8");
  std::vector<std::size_t> tau(m, 0);
  while (true) {
    fn(AlphaPartition(tau));
    std::size_t pos = m;
    while (pos > 0 && tau[pos - 1] == m - 1) tau[--pos] = 0;
    if (pos == 0) return;
    ++tau[pos - 1];
  }
}

inline std::vector<AlphaPartition> enumerate_partitions(std::size_t m) {
  std::vector<AlphaPartition> out;
  for_each_partition(m, [&](const AlphaPartition& p) { out.push_back(p); });
  return out;
}

}  // namespace dqso
