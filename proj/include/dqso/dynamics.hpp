#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dqso/qso.hpp"
#include "dqso/simplex.hpp"
#include "dqso/structure.hpp"

namespace dqso {

inline constexpr std::size_t kMaxSteps = 100'000;
inline constexpr double kConvergenceTol = 1e-10;

namespace detail {
inline void check_steps(std::size_t steps) {
  if (steps > kMaxSteps) throw std::invalid_argument("step count exceeds the iteration cap");
}
}  // namespace detail

struct TrajectoryRecord {
  std::vector<SimplexPoint> points;  // V^k x for k = 0..N
  std::vector<double> step_gaps;     // gap(V^k x, V^{k+1} x), k = 0..N-1
  std::optional<std::size_t> converged_at;
  std::optional<SimplexPoint> limit;
};

// Iterates V from x0. converged_at is the first k with
// ||V^{k+1}x - V^k x||_inf < conv_tol; iteration continues to N regardless.
inline TrajectoryRecord trajectory(const HeredityTensor& t, const SimplexPoint& x0,
                                   std::size_t steps, double conv_tol = kConvergenceTol) {
  detail::check_steps(steps);
  if (x0.dim() != t.dim()) throw DimensionMismatch(t.dim(), x0.dim());
  TrajectoryRecord rec;
  rec.points.reserve(steps + 1);
  rec.step_gaps.reserve(steps);
  rec.points.push_back(x0);
  for (std::size_t k = 0; k < steps; ++k) {
    SimplexPoint next = apply(t, rec.points.back());
    rec.step_gaps.push_back(majorization_gap(rec.points.back(), next));
    if (!rec.converged_at && max_norm_distance(next, rec.points.back()) < conv_tol)
      rec.converged_at = k;
    rec.points.push_back(std::move(next));
  }
  if (rec.converged_at) rec.limit = rec.points.back();
  return rec;
}

// phi(x) = mass on the recurrent indices, with the per-step split
//
//   phi(V x) = phi(x) + sum_{i transient, tau(i) recurrent} x_i^2 + sum_s L_s(x),
//   L_s(x) = sum_{i<j} 2 p_{ij,s} x_i x_j - x_r sum_{i != r} x_i,
//
// where s runs over recurrent outputs and r is the recurrent index with
// tau(r) = s. Every L_s is nonnegative when the pinned-half condition holds.
struct LyapunovSeries {
  std::vector<std::size_t> recurrent_set;
  std::vector<double> phi;                   // k = 0..N
  std::vector<double> feeding_residue;       // k = 0..N-1
  std::vector<double> transient_square_sum;  // sum over all transient i of x_i^2
  std::vector<double> cross_terms;           // sum_s L_s
  std::vector<double> min_cross_term;        // min_s L_s
  std::vector<double> identity_residual;     // phi[k+1] - phi[k] - residue - cross
  double limit_estimate = 0.0;               // last phi value (a lower bound)
};

inline LyapunovSeries lyapunov_series(const HeredityTensor& t, const SimplexPoint& x0,
                                      std::size_t steps) {
  detail::check_steps(steps);
  if (x0.dim() != t.dim()) throw DimensionMismatch(t.dim(), x0.dim());
  const std::size_t m = t.dim();
  AlphaPartition alpha = [&] {
    try {
      return extract_alpha(t);
    } catch (const Error& e) {
      throw NotCanonical(e.what());
    }
  }();
  const auto cs = transfer_cycles(alpha);

  LyapunovSeries s;
  s.recurrent_set = cs.recurrent();
  std::vector<bool> recurrent(m, false);
  for (std::size_t i : s.recurrent_set) recurrent[i] = true;
  std::vector<std::size_t> preimage(m, m);  // recurrent output -> recurrent source
  for (std::size_t i : s.recurrent_set) preimage[alpha.target(i)] = i;

  auto phi = [&](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t i : s.recurrent_set) v += x[i];
    return v;
  };

  std::vector<double> x = x0.values(), off(m);
  s.phi.push_back(phi(x));
  for (std::size_t k = 0; k < steps; ++k) {
    double feeding = 0.0, transient_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (recurrent[i]) continue;
      transient_sq += x[i] * x[i];
      if (recurrent[alpha.target(i)]) feeding += x[i] * x[i];
    }
    std::fill(off.begin(), off.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double w = 2.0 * x[i] * x[j];
        const auto a = t.distribution(i, j);
        for (std::size_t o = 0; o < m; ++o) off[o] += a[o] * w;
      }
    double cross = 0.0, min_cross = std::numeric_limits<double>::infinity();
    for (std::size_t out : s.recurrent_set) {
      const std::size_t r = preimage[out];
      double others = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        if (i != r) others += x[i];
      const double L = off[out] - x[r] * others;
      cross += L;
      min_cross = std::min(min_cross, L);
    }
    SimplexPoint next = apply(t, SimplexPoint(x));
    x = next.values();
    const double phi_next = phi(x);
    s.feeding_residue.push_back(feeding);
    s.transient_square_sum.push_back(transient_sq);
    s.cross_terms.push_back(cross);
    s.min_cross_term.push_back(min_cross);
    s.identity_residual.push_back(phi_next - s.phi.back() - feeding - cross);
    s.phi.push_back(phi_next);
  }
  s.limit_estimate = s.phi.back();
  return s;
}

// Running averages A_n = (x + Vx + ... + V^{n-1}x)/n for n = 1..steps.
inline std::vector<SimplexPoint> cesaro_means(const HeredityTensor& t, const SimplexPoint& x0,
                                              std::size_t steps) {
  detail::check_steps(steps);
  if (x0.dim() != t.dim()) throw DimensionMismatch(t.dim(), x0.dim());
  const std::size_t m = t.dim();
  std::vector<SimplexPoint> means;
  means.reserve(steps);
  std::vector<double> sum(m, 0.0), avg(m);
  SimplexPoint x = x0;
  for (std::size_t n = 1; n <= steps; ++n) {
    for (std::size_t i = 0; i < m; ++i) sum[i] += x[i];
    for (std::size_t i = 0; i < m; ++i) avg[i] = sum[i] / static_cast<double>(n);
    means.emplace_back(avg);
    if (n < steps) x = apply(t, x);
  }
  return means;
}

inline constexpr double kClusterRadius = 1e-4;

struct OmegaLimit {
  FixedPointSet fixed_points;
  std::vector<double> distances;      // dist(V^k x, Fix(V)), k = 0..N
  std::vector<SimplexPoint> clusters; // centroids of the post-burn-in tail
};

// Greedy agglomeration: a point joins the first cluster whose seed point is
// within `radius` in max-norm.
inline std::vector<SimplexPoint> cluster_points(std::span<const SimplexPoint> pts,
                                                double radius = kClusterRadius) {
  struct Cluster {
    const SimplexPoint* seed;
    std::vector<double> sum;
    std::size_t n;
  };
  std::vector<Cluster> clusters;
  for (const auto& p : pts) {
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
      return max_norm_distance(*c.seed, p) <= radius;
    });
    if (it == clusters.end()) {
      clusters.push_back({&p, p.values(), 1});
    } else {
      for (std::size_t i = 0; i < p.dim(); ++i) it->sum[i] += p[i];
      ++it->n;
    }
  }
  std::vector<SimplexPoint> out;
  for (auto& c : clusters) {
    for (double& v : c.sum) v /= static_cast<double>(c.n);
    out.emplace_back(std::move(c.sum));
  }
  return out;
}

inline OmegaLimit omega_limit(const HeredityTensor& t, const SimplexPoint& x0, std::size_t steps,
                              std::size_t burn_in, double radius = kClusterRadius) {
  if (burn_in > steps) throw std::invalid_argument("burn-in exceeds the step count");
  auto fps = fixed_point_set(t);
  const auto rec = trajectory(t, x0, steps);
  std::vector<double> dist;
  dist.reserve(rec.points.size());
  for (const auto& p : rec.points) dist.push_back(fps.distance(p));
  auto tail = std::span<const SimplexPoint>(rec.points).subspan(burn_in);
  return {std::move(fps), std::move(dist), cluster_points(tail, radius)};
}

}  // namespace dqso
