#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dqso/dissipativity.hpp"
#include "dqso/errors.hpp"
#include "dqso/qso.hpp"
#include "dqso/simplex.hpp"

namespace dqso {

// Functional-graph decomposition of the transfer map tau: recurrent cycles
// and the transient indices that eventually fall into them.
struct CycleStructure {
  // Each cycle starts at its smallest index and follows tau; cycles are
  // ordered by their first index.
  std::vector<std::vector<std::size_t>> cycles;
  std::vector<std::size_t> transient;

  std::size_t count() const { return cycles.size(); }

  std::vector<std::size_t> lengths() const {
    std::vector<std::size_t> out;
    for (const auto& c : cycles) out.push_back(c.size());
    return out;
  }

  std::vector<std::size_t> recurrent() const {
    std::vector<std::size_t> out;
    for (const auto& c : cycles) out.insert(out.end(), c.begin(), c.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t self_loops() const {
    return static_cast<std::size_t>(
        std::count_if(cycles.begin(), cycles.end(), [](const auto& c) { return c.size() == 1; }));
  }
};

inline CycleStructure transfer_cycles(const AlphaPartition& partition) {
  const std::size_t m = partition.dim();
  enum : unsigned char { Unseen, OnPath, Done };
  std::vector<unsigned char> state(m, Unseen);
  std::vector<bool> on_cycle(m, false);
  CycleStructure cs;

  std::vector<std::size_t> path;
  for (std::size_t s = 0; s < m; ++s) {
    if (state[s] != Unseen) continue;
    path.clear();
    std::size_t v = s;
    while (state[v] == Unseen) {
      state[v] = OnPath;
      path.push_back(v);
      v = partition.target(v);
    }
    if (state[v] == OnPath) {
      auto it = std::find(path.begin(), path.end(), v);
      std::vector<std::size_t> cycle(it, path.end());
      std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
      for (std::size_t c : cycle) on_cycle[c] = true;
      cs.cycles.push_back(std::move(cycle));
    }
    for (std::size_t p : path) state[p] = Done;
  }
  std::sort(cs.cycles.begin(), cs.cycles.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t i = 0; i < m; ++i)
    if (!on_cycle[i]) cs.transient.push_back(i);
  return cs;
}

// Fix(V) of a canonical dissipative operator: the convex hull of the cycle
// barycenters. Generators have pairwise disjoint supports, so a point of the
// set is constant on each cycle and zero on transient indices.
class FixedPointSet {
 public:
  enum class Kind { Unique, Polytope };

  FixedPointSet(std::size_t m, std::vector<std::vector<std::size_t>> supports)
      : m_(m), supports_(std::move(supports)) {
    if (supports_.empty()) throw std::invalid_argument("fixed-point set needs a generator");
    for (const auto& s : supports_) generators_.push_back(SimplexPoint::face_center(m_, s));
  }

  Kind kind() const { return generators_.size() == 1 ? Kind::Unique : Kind::Polytope; }
  std::size_t dim() const { return m_; }
  const std::vector<SimplexPoint>& generators() const { return generators_; }
  const std::vector<std::vector<std::size_t>>& supports() const { return supports_; }

  // sum_c w_c g_c for weights on the generator simplex.
  SimplexPoint point(std::span<const double> weights) const {
    if (weights.size() != generators_.size())
      throw DimensionMismatch(generators_.size(), weights.size());
    std::vector<double> v(m_, 0.0);
    for (std::size_t c = 0; c < generators_.size(); ++c)
      for (std::size_t i = 0; i < m_; ++i) v[i] += weights[c] * generators_[c][i];
    return SimplexPoint(std::move(v));
  }

  // Convex-combination weights of a point of the set (mass on each cycle).
  std::vector<double> weights(std::span<const double> x) const {
    std::vector<double> w;
    for (const auto& s : supports_) {
      double mass = 0.0;
      for (std::size_t i : s) mass += x[i];
      w.push_back(mass);
    }
    return w;
  }

  // Euclidean projection onto the hull. With disjoint supports this reduces
  // to projecting the per-cycle means onto {v >= 0, sum_c |c| v_c = 1}.
  std::vector<double> project(std::span<const double> x) const {
    if (x.size() != m_) throw DimensionMismatch(m_, x.size());
    const std::size_t p = supports_.size();
    std::vector<double> mean(p), size(p);
    for (std::size_t c = 0; c < p; ++c) {
      size[c] = static_cast<double>(supports_[c].size());
      double s = 0.0;
      for (std::size_t i : supports_[c]) s += x[i];
      mean[c] = s / size[c];
    }
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
    double num = 0.0, den = 0.0, mu = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      num += size[order[r]] * mean[order[r]];
      den += size[order[r]];
      const double candidate = (num - 1.0) / den;
      if (mean[order[r]] - candidate > 0.0) mu = candidate;
    }
    std::vector<double> y(m_, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
      const double v = std::max(mean[c] - mu, 0.0);
      for (std::size_t i : supports_[c]) y[i] = v;
    }
    return y;
  }

  // Max-norm distance from x to its projection onto the set.
  double distance(std::span<const double> x) const {
    return max_norm_distance(x, project(x));
  }
  double distance(const SimplexPoint& x) const { return distance(x.coords()); }

  bool contains(const SimplexPoint& x, double tol) const { return distance(x) <= tol; }

 private:
  std::size_t m_;
  std::vector<std::vector<std::size_t>> supports_;
  std::vector<SimplexPoint> generators_;
};

struct CanonicalForm {
  HeredityTensor tensor;
  AlphaPartition partition;
  CycleStructure cycles;
};

// Checks every precondition of the classification; throws NotCanonical.
inline CanonicalForm canonical_form(const HeredityTensor& t, double tol = kDiagonalTol) {
  const auto report = validate(t);
  if (!report.ok()) throw NotCanonical("operator fails coefficient validation");
  const auto audit = audit_necessary(t, tol);
  if (!audit.diagonal_ok)
    throw NotCanonical("some diagonal distribution a_ii is not a vertex");
  if (!audit.passed())
    throw NotCanonical("operator violates a necessary dissipativity condition");
  const auto cycles = transfer_cycles(*audit.partition);
  return {t, *audit.partition, cycles};
}

inline FixedPointSet fixed_point_set(const CycleStructure& cycles, std::size_t m) {
  return FixedPointSet(m, cycles.cycles);
}

inline FixedPointSet fixed_point_set(const HeredityTensor& t, double tol = kDiagonalTol) {
  const auto cf = canonical_form(t, tol);
  return fixed_point_set(cf.cycles, t.dim());
}

// Structural shape of the transfer map, named by what the α-partition does.
enum class StructuralForm {
  SingleCycle,          // no self-loop, one cycle of length >= 2
  SeveralCycles,        // no self-loop, two or more cycles
  LoopWithCycles,       // exactly one self-loop plus cycles of length >= 2
  SingleLoop,           // exactly one self-loop and no other cycle
  SeveralLoops,         // two or more self-loops
  AllSquaresToOne,      // refinement: a single block alpha_k = I
  SingletonSplit,       // refinement: blocks I \ {l} -> a (a loop) and {l} -> b
};

inline const char* to_string(StructuralForm f) {
  switch (f) {
    case StructuralForm::SingleCycle: return "single-cycle";
    case StructuralForm::SeveralCycles: return "several-cycles";
    case StructuralForm::LoopWithCycles: return "loop-with-cycles";
    case StructuralForm::SingleLoop: return "single-loop";
    case StructuralForm::SeveralLoops: return "several-loops";
    case StructuralForm::AllSquaresToOne: return "all-squares-to-one";
    case StructuralForm::SingletonSplit: return "singleton-split";
  }
  return "?";
}

inline std::vector<StructuralForm> structural_forms(const AlphaPartition& alpha,
                                                    const CycleStructure& cs) {
  std::vector<StructuralForm> forms;
  const std::size_t loops = cs.self_loops();
  const std::size_t longer = cs.count() - loops;
  if (loops == 0) {
    forms.push_back(longer == 1 ? StructuralForm::SingleCycle : StructuralForm::SeveralCycles);
  } else if (loops == 1) {
    forms.push_back(longer == 0 ? StructuralForm::SingleLoop : StructuralForm::LoopWithCycles);
  } else {
    forms.push_back(StructuralForm::SeveralLoops);
  }

  std::vector<std::size_t> used;  // outputs with a nonempty block
  const auto blocks = alpha.blocks();
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (!blocks[k].empty()) used.push_back(k);
  if (used.size() == 1) forms.push_back(StructuralForm::AllSquaresToOne);
  if (used.size() == 2) {
    auto split = [&](std::size_t big, std::size_t single) {
      return blocks[single].size() == 1 && alpha.target(big) == big;
    };
    if (split(used[0], used[1]) || split(used[1], used[0]))
      forms.push_back(StructuralForm::SingletonSplit);
  }
  return forms;
}

struct Classification {
  enum class Verdict { Regular, InfinitelyMany };
  Verdict verdict;
  FixedPointSet fixed_points;
  AlphaPartition partition;
  CycleStructure cycles;
  std::vector<StructuralForm> forms;
  // True when some recurrent cycle has length >= 2. On the recurrent face V
  // then acts as a cyclic permutation of coordinates.
  bool has_rotating_cycle = false;
  bool linear = false;
};

inline Classification classify(const HeredityTensor& t, double tol = kDiagonalTol) {
  auto cf = canonical_form(t, tol);
  auto fps = fixed_point_set(cf.cycles, t.dim());
  const auto verdict = cf.cycles.count() == 1 ? Classification::Verdict::Regular
                                              : Classification::Verdict::InfinitelyMany;
  const auto lengths = cf.cycles.lengths();
  const bool rotating = std::any_of(lengths.begin(), lengths.end(), [](auto n) { return n > 1; });
  auto forms = structural_forms(cf.partition, cf.cycles);
  return Classification{verdict,         std::move(fps), std::move(cf.partition),
                        std::move(cf.cycles), std::move(forms), rotating, is_linear(t)};
}

inline const char* to_string(Classification::Verdict v) {
  return v == Classification::Verdict::Regular ? "Regular" : "InfinitelyMany";
}

inline double fixed_point_residual(const HeredityTensor& t, std::span<const double> x) {
  std::vector<double> y(t.dim());
  detail::apply_raw(t, x, y);
  return max_norm_distance(x, y);
}

struct NumericOptions {
  std::size_t restarts = 20;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  std::size_t damped_iterations = 2000;
  std::size_t polish_iterations = 200;
  double dedup_radius = 1e-6;
};

namespace detail {

// Gauss-Newton on F(x) = Vx - x over the affine hull, projected back to the
// simplex, with step halving.
inline std::vector<double> polish_fixed_point(const HeredityTensor& t, std::vector<double> x,
                                              std::size_t iterations) {
  const std::size_t m = t.dim();
  std::vector<double> vx(m);
  auto residual = [&](std::span<const double> z) {
    apply_raw(t, z, vx);
    return max_norm_distance(z, vx);
  };
  double r = residual(x);
  Eigen::MatrixXd A(m + 1, m);
  Eigen::VectorXd b(m + 1);
  for (std::size_t it = 0; it < iterations && r > 1e-16; ++it) {
    apply_raw(t, x, vx);
    const auto J = jacobian(t, x);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t l = 0; l < m; ++l) A(k, l) = J[k * m + l] - (k == l ? 1.0 : 0.0);
      b(k) = x[k] - vx[k];
    }
    A.row(m).setOnes();
    b(m) = 0.0;
    const Eigen::VectorXd d = A.completeOrthogonalDecomposition().solve(b);
    bool improved = false;
    std::vector<double> trial(m);
    for (double s = 1.0; s > 1e-12; s *= 0.5) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = x[i] + s * d(static_cast<Eigen::Index>(i));
      trial = project_to_simplex(trial);
      const double rt = residual(trial);
      if (rt < r) {
        x = trial;
        r = rt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace detail

// Independent numerical oracle for Fix(V): multistart damped iteration
// x <- (x + Vx)/2 followed by Gauss-Newton polishing. Starts are the
// vertices, the barycenter and `restarts` uniform samples. Works for any
// valid operator; returns deduplicated points with residual below tol.
inline std::vector<SimplexPoint> numeric_fixed_points(const HeredityTensor& t,
                                                      const NumericOptions& opt = {}) {
  const std::size_t m = t.dim();
  std::vector<SimplexPoint> starts;
  for (std::size_t k = 0; k < m; ++k) starts.push_back(SimplexPoint::vertex(m, k));
  starts.push_back(SimplexPoint::barycenter(m));
  for (auto& p : sample_uniform(m, opt.restarts, opt.seed)) starts.push_back(std::move(p));

  std::vector<SimplexPoint> found;
  std::vector<double> y(m);
  for (const auto& s : starts) {
    std::vector<double> x = s.values();
    for (std::size_t it = 0; it < opt.damped_iterations; ++it) {
      detail::apply_raw(t, x, y);
      double diff = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        diff = std::max(diff, std::abs(y[i] - x[i]));
        x[i] = 0.5 * (x[i] + y[i]);
        sum += x[i];
      }
      for (double& v : x) v /= sum;
      if (diff < 1e-15) break;
    }
    x = detail::polish_fixed_point(t, std::move(x), opt.polish_iterations);
    if (fixed_point_residual(t, x) >= opt.tol) continue;
    SimplexPoint p(std::move(x));
    const bool dup = std::any_of(found.begin(), found.end(), [&](const SimplexPoint& q) {
      return max_norm_distance(p, q) < opt.dedup_radius;
    });
    if (!dup) found.push_back(std::move(p));
  }
  if (found.empty()) throw NoConvergence("no start reached the fixed-point residual tolerance");
  return found;
}

}  // namespace dqso
