#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "dqso/qso.hpp"
#include "dqso/rng.hpp"
#include "dqso/simplex.hpp"

namespace dqso {

// Necessary conditions every dissipative operator satisfies.
//
//  * every a_ii is a vertex (the α-partition exists);
//  * if j ∈ α_k then p_{ij,k} >= 1/2 for every i ("pinned half");
//  * for m >= 3, every a_ij has at most two nonzero entries.
struct PinnedHalfViolation {
  std::size_t i, j, k;  // 0-based; j ∈ α_k
  double value;         // p_{ij,k} < 1/2
};

struct SupportViolation {
  std::size_t i, j;         // 0-based, i <= j
  std::size_t support_size; // number of entries of a_ij above tol
};

struct AuditReport {
  bool diagonal_ok = false;
  std::optional<AlphaPartition> partition;
  std::vector<PinnedHalfViolation> pinned_half_violations;
  std::vector<SupportViolation> support_violations;

  bool passed() const {
    return diagonal_ok && pinned_half_violations.empty() && support_violations.empty();
  }
};

inline AuditReport audit_necessary(const HeredityTensor& t, double tol = kDiagonalTol) {
  AuditReport r;
  const std::size_t m = t.dim();
  try {
    r.partition = extract_alpha(t, tol);
    r.diagonal_ok = true;
  } catch (const NoUnitDiagonal&) {
  } catch (const AmbiguousDiagonal&) {
  }

  if (r.partition) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        const std::size_t k0 = r.partition->target(j);
        const double v = t(i, j, k0);
        if (v < 0.5 - tol) r.pinned_half_violations.push_back({i, j, k0, v});
      }
  }
  if (m >= 3) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) {
        std::size_t support = 0;
        for (double v : t.distribution(i, j)) support += v > tol;
        if (support > 2) r.support_violations.push_back({i, j, support});
      }
  }
  return r;
}

// The point (1 - lambda) e_j + lambda e_i.
inline SimplexPoint edge_point(std::size_t m, std::size_t i, std::size_t j,
                               double lambda) {
  std::vector<double> v(m, 0.0);
  v.at(j) += 1.0 - lambda;
  v.at(i) += lambda;
  return SimplexPoint(std::move(v));
}

struct CheckOptions {
  std::size_t samples = 10'000;
  std::size_t restarts = 20;
  std::uint64_t seed = 0;
  std::size_t edge_grid = 101;
  double violation_tol = 1e-12;
  double initial_step = 0.1;
  double final_step = 1e-7;
  std::size_t max_moves = 200;  // accepted moves per restart
};

enum class SearchStage { Vertices, Edges, Samples, LocalSearch };

inline const char* to_string(SearchStage s) {
  switch (s) {
    case SearchStage::Vertices: return "vertices";
    case SearchStage::Edges: return "edges";
    case SearchStage::Samples: return "samples";
    case SearchStage::LocalSearch: return "local-search";
  }
  return "?";
}

struct Counterexample {
  SimplexPoint point;
  double gap;
  std::size_t prefix;  // witness prefix length
  SearchStage stage;
};

struct DissipativityVerdict {
  enum class Status { CounterexampleFound, NoViolationFound };
  Status status = Status::NoViolationFound;
  std::optional<Counterexample> counterexample;
  std::size_t samples_tested = 0;  // every point whose gap was evaluated
  double min_gap_seen = std::numeric_limits<double>::infinity();
};

namespace detail {

class GapEvaluator {
 public:
  explicit GapEvaluator(const HeredityTensor& t) : t_(t), out_(t.dim()) {}

  // gap(x, Vx) on a raw simplex vector.
  double operator()(std::span<const double> x) {
    ++count_;
    apply_raw(t_, x, out_);
    return majorization_gap(x, out_);
  }

  std::size_t count() const { return count_; }

 private:
  const HeredityTensor& t_;
  std::vector<double> out_;
  std::size_t count_ = 0;
};

struct Scored {
  std::vector<double> x;
  double gap;
};

// Derivative-free descent on gap(x, Vx): moves mass between coordinate pairs,
// halving the step when no move improves.
inline Scored local_descent(GapEvaluator& eval, std::vector<double> x,
                            const CheckOptions& opt) {
  const std::size_t m = x.size();
  double g = eval(x);
  std::vector<double> trial(m), best_trial(m);
  std::size_t moves = 0;
  for (double h = opt.initial_step; h >= opt.final_step && moves < opt.max_moves;) {
    double best = g;
    for (std::size_t to = 0; to < m; ++to)
      for (std::size_t from = 0; from < m; ++from) {
        if (to == from || x[from] <= 0.0) continue;
        const double d = std::min(h, x[from]);
        trial = x;
        trial[to] += d;
        trial[from] -= d;
        const double gt = eval(trial);
        if (gt < best) {
          best = gt;
          best_trial = trial;
        }
      }
    if (best < g) {
      x = best_trial;
      g = best;
      ++moves;
    } else {
      h *= 0.5;
    }
  }
  return {std::move(x), g};
}

}  // namespace detail

// Searches for x with gap(x, Vx) < 0, i.e. a point where Vx ≻ x fails.
//
// Stages run in order (vertices, edge points (1-λ)e_j + λe_i on a uniform λ
// grid, uniform samples, multistart local descent from the worst points seen)
// and the search stops after the first stage that produces a violation; the
// worst point of that stage is returned. NoViolationFound is a sampling
// outcome, not a proof.
inline DissipativityVerdict check_dissipative(const HeredityTensor& t,
                                              const CheckOptions& opt = {}) {
  const std::size_t m = t.dim();
  detail::GapEvaluator eval(t);
  DissipativityVerdict verdict;
  std::vector<detail::Scored> pool;  // candidates for local descent

  auto finish_stage = [&](SearchStage stage, const detail::Scored* worst) {
    verdict.samples_tested = eval.count();
    if (!worst || worst->gap >= -opt.violation_tol) return false;
    // Recertify on a validated point through the public path.
    SimplexPoint p(worst->x);
    const auto v = is_majorized(p, apply(t, p));
    if (v.gap >= -opt.violation_tol) return false;
    verdict.status = DissipativityVerdict::Status::CounterexampleFound;
    verdict.counterexample = Counterexample{std::move(p), v.gap, v.witness_prefix, stage};
    verdict.min_gap_seen = std::min(verdict.min_gap_seen, v.gap);
    return true;
  };

  auto scan = [&](SearchStage stage, auto&& points_fn) {
    std::optional<detail::Scored> worst;
    points_fn([&](std::vector<double> x) {
      const double g = eval(x);
      verdict.min_gap_seen = std::min(verdict.min_gap_seen, g);
      if (!worst || g < worst->gap) worst = detail::Scored{x, g};
      pool.push_back({std::move(x), g});
    });
    return finish_stage(stage, worst ? &*worst : nullptr);
  };

  if (scan(SearchStage::Vertices, [&](auto&& emit) {
        for (std::size_t k = 0; k < m; ++k) emit(SimplexPoint::vertex(m, k).values());
      }))
    return verdict;

  if (scan(SearchStage::Edges, [&](auto&& emit) {
        const std::size_t n = std::max<std::size_t>(opt.edge_grid, 2);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            for (std::size_t l = 0; l < n; ++l) {
              const double lambda = static_cast<double>(l) / static_cast<double>(n - 1);
              emit(edge_point(m, i, j, lambda).values());
            }
          }
      }))
    return verdict;

  if (opt.samples > 0 &&
      scan(SearchStage::Samples, [&](auto&& emit) {
        for (auto& p : sample_uniform(m, opt.samples, opt.seed)) emit(p.values());
      }))
    return verdict;

  // Local descent from the worst distinct points seen so far.
  std::stable_sort(pool.begin(), pool.end(),
                   [](const auto& a, const auto& b) { return a.gap < b.gap; });
  std::vector<const detail::Scored*> starts;
  for (const auto& s : pool) {
    if (starts.size() >= opt.restarts) break;
    bool dup = false;
    for (const auto* q : starts) dup = dup || max_norm_distance(q->x, s.x) < 1e-9;
    if (!dup) starts.push_back(&s);
  }
  std::optional<detail::Scored> worst;
  for (const auto* s : starts) {
    auto r = detail::local_descent(eval, s->x, opt);
    verdict.min_gap_seen = std::min(verdict.min_gap_seen, r.gap);
    if (!worst || r.gap < worst->gap) worst = std::move(r);
  }
  finish_stage(SearchStage::LocalSearch, worst ? &*worst : nullptr);
  return verdict;
}

// Edge construction: for each failed necessary condition, tries the
// points that the corresponding impossibility argument uses and returns the
// first one with a certified negative gap.
//
//  * non-vertex a_ii: the vertex e_i itself;
//  * pinned-half or support failure at (i, j), j in alpha_k0: the edge points
//    (1 - lambda) e_j + lambda e_i for small lambda (both orientations).
inline constexpr double kEdgeLambdas[] = {0.01, 0.05, 0.1};

inline std::optional<Counterexample> refute_from_audit(const HeredityTensor& t,
                                                       const AuditReport& audit,
                                                       double violation_tol = 1e-12) {
  const std::size_t m = t.dim();
  auto certify = [&](const SimplexPoint& p, SearchStage stage) -> std::optional<Counterexample> {
    const auto v = is_majorized(p, apply(t, p));
    if (v.gap < -violation_tol) return Counterexample{p, v.gap, v.witness_prefix, stage};
    return std::nullopt;
  };
  auto edges = [&](std::size_t i, std::size_t j) -> std::optional<Counterexample> {
    for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}})
      for (double lambda : kEdgeLambdas)
        if (auto ce = certify(edge_point(m, a, b, lambda), SearchStage::Edges)) return ce;
    return std::nullopt;
  };

  if (!audit.diagonal_ok) {
    for (std::size_t i = 0; i < m; ++i)
      if (auto ce = certify(SimplexPoint::vertex(m, i), SearchStage::Vertices)) return ce;
  }
  for (const auto& v : audit.pinned_half_violations)
    if (auto ce = edges(v.i, v.j)) return ce;
  for (const auto& v : audit.support_violations)
    if (v.i != v.j)
      if (auto ce = edges(v.i, v.j)) return ce;
  return std::nullopt;
}

}  // namespace dqso
