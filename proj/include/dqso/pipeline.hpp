#pragma once

// Command implementations shared by the CLI and the tests. Each run_* builds
// a Report from library calls only; the CLI merely parses flags and writes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dqso/dissipativity.hpp"
#include "dqso/dynamics.hpp"
#include "dqso/generator.hpp"
#include "dqso/io.hpp"
#include "dqso/report.hpp"
#include "dqso/structure.hpp"

namespace dqso {

inline constexpr const char* kToolVersion = "dqso 1.0.0";

struct RunOptions {
  std::uint64_t seed = 0;
  std::size_t samples = 10'000;
  std::size_t restarts = 20;
  std::size_t steps = 1000;
  double tol = kDiagonalTol;
  std::optional<std::vector<double>> x0;  // default: barycenter
  std::optional<std::size_t> burn_in;     // default: steps / 2
  // generate
  std::size_t m = 3;
  std::optional<std::vector<std::size_t>> partition;  // 0-based targets
  std::size_t max_rejections = 100;
  // sweep-m3
  std::size_t draws = 10;
};

struct OperatorSource {
  std::string label;
  HeredityTensor tensor;
  Json metadata = Json::object();
};

inline constexpr const char* kCatalogPrefix = "catalog:";

// `catalog:NAME` or a path to an operator file. With validate=false the
// coefficients are only parsed, so the validate command can report issues.
inline OperatorSource resolve_operator(const std::string& source, bool validate_coefficients = true) {
  const std::string prefix = kCatalogPrefix;
  if (source.rfind(prefix, 0) == 0) {
    const auto name = source.substr(prefix.size());
    const auto cat = catalog();
    const auto it = cat.find(name);
    if (it == cat.end()) throw ParseError("unknown catalog entry '" + name + "'");
    return {source, it->second.tensor,
            Json{{"name", it->second.name}, {"description", it->second.description}}};
  }
  auto doc = validate_coefficients ? load_operator_document(source)
                                   : parse_operator(read_json_file(source));
  return {source, std::move(doc.tensor), std::move(doc.metadata)};
}

namespace detail {

inline SimplexPoint start_point(const RunOptions& opt, std::size_t m) {
  if (!opt.x0) return SimplexPoint::barycenter(m);
  if (opt.x0->size() != m) throw DimensionMismatch(m, opt.x0->size());
  return SimplexPoint(*opt.x0);
}

inline Json base_inputs(const OperatorSource& src) {
  return Json{{"operator", src.label}, {"m", src.tensor.dim()}, {"metadata", src.metadata}};
}

inline Report make_report(std::string command, Json inputs) {
  Report r;
  r.command = std::move(command);
  r.inputs = std::move(inputs);
  r.provenance = Json{{"tool", kToolVersion}};
  return r;
}

inline CheckOptions check_options(const RunOptions& opt) {
  CheckOptions c;
  c.samples = opt.samples;
  c.restarts = opt.restarts;
  c.seed = opt.seed;
  return c;
}

// Recurrent mass per point when the α-partition exists.
inline std::vector<std::optional<double>> recurrent_mass(const HeredityTensor& t,
                                                         std::span<const SimplexPoint> pts,
                                                         double tol) {
  std::vector<std::optional<double>> out(pts.size());
  std::vector<std::size_t> rec;
  try {
    rec = transfer_cycles(extract_alpha(t, tol)).recurrent();
  } catch (const Error&) {
    return out;
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    double s = 0.0;
    for (std::size_t i : rec) s += pts[k][i];
    out[k] = s;
  }
  return out;
}

inline Series make_series(const HeredityTensor& t, std::vector<SimplexPoint> pts, double tol) {
  Series s;
  s.gap.reserve(pts.size());
  std::vector<double> vx(t.dim());
  for (const auto& p : pts) {
    detail::apply_raw(t, p.coords(), vx);
    s.gap.push_back(majorization_gap(p.coords(), vx));
  }
  s.phi = recurrent_mass(t, pts, tol);
  s.points = std::move(pts);
  return s;
}

inline Json classification_provenance(const Classification& c) {
  return Json{{"structural_forms", forms_json(c.forms)},
              {"fixed_point_set", "convex hull of the barycenters of the transfer-map cycles"},
              {"verdict", c.cycles.count() == 1 ? "one cycle: unique fixed point"
                                                : "several cycles: a polytope of fixed points"}};
}

}  // namespace detail

inline Report run_validate(const OperatorSource& src) {
  auto r = detail::make_report("validate", detail::base_inputs(src));
  const auto report = validate(src.tensor);
  r.results = to_json(report);
  r.exit_code = report.ok() ? 0 : 1;
  return r;
}

inline Report run_audit(const OperatorSource& src, const RunOptions& opt) {
  auto inputs = detail::base_inputs(src);
  inputs["tol"] = opt.tol;
  auto r = detail::make_report("audit", std::move(inputs));
  r.results = to_json(audit_necessary(src.tensor, opt.tol));
  return r;
}

inline Report run_check(const OperatorSource& src, const RunOptions& opt) {
  auto inputs = detail::base_inputs(src);
  inputs["seed"] = opt.seed;
  inputs["samples"] = opt.samples;
  inputs["restarts"] = opt.restarts;
  auto r = detail::make_report("check", std::move(inputs));
  const auto verdict = check_dissipative(src.tensor, detail::check_options(opt));
  r.results = to_json(verdict);
  r.exit_code = verdict.status == DissipativityVerdict::Status::CounterexampleFound ? 2 : 0;
  return r;
}

inline Report run_classify(const OperatorSource& src, const RunOptions& opt) {
  auto inputs = detail::base_inputs(src);
  inputs["tol"] = opt.tol;
  auto r = detail::make_report("classify", std::move(inputs));
  const auto c = classify(src.tensor, opt.tol);
  r.results = to_json(c);
  r.provenance.update(detail::classification_provenance(c));
  return r;
}

inline Report run_fixed_points(const OperatorSource& src, const RunOptions& opt) {
  auto inputs = detail::base_inputs(src);
  inputs["seed"] = opt.seed;
  inputs["restarts"] = opt.restarts;
  inputs["tol"] = opt.tol;
  auto r = detail::make_report("fixed-points", std::move(inputs));
  const auto c = classify(src.tensor, opt.tol);
  NumericOptions nopt;
  nopt.seed = opt.seed;
  nopt.restarts = opt.restarts;
  const auto numeric = numeric_fixed_points(src.tensor, nopt);

  Json predicted = to_json(c.fixed_points);
  Json residuals = Json::array();
  for (const auto& g : c.fixed_points.generators())
    residuals.push_back(fixed_point_residual(src.tensor, g.coords()));
  predicted["generator_residuals"] = std::move(residuals);

  Json found = Json::array();
  bool all_inside = true;
  for (const auto& p : numeric) {
    const double d = c.fixed_points.distance(p);
    all_inside = all_inside && d <= 1e-8;
    found.push_back(Json{{"point", to_json(p)},
                         {"residual", fixed_point_residual(src.tensor, p.coords())},
                         {"distance_to_predicted", d}});
  }
  r.results = Json{{"predicted", std::move(predicted)},
                   {"numeric", std::move(found)},
                   {"numeric_inside_predicted", all_inside}};
  r.provenance.update(detail::classification_provenance(c));
  return r;
}

inline Report run_simulate(const OperatorSource& src, const RunOptions& opt) {
  const auto x0 = detail::start_point(opt, src.tensor.dim());
  auto inputs = detail::base_inputs(src);
  inputs["x0"] = to_json(x0);
  inputs["steps"] = opt.steps;
  auto r = detail::make_report("simulate", std::move(inputs));
  auto rec = trajectory(src.tensor, x0, opt.steps);

  double min_gap = std::numeric_limits<double>::infinity();
  for (double g : rec.step_gaps) min_gap = std::min(min_gap, g);
  Json lyap = nullptr;
  try {
    const auto ls = lyapunov_series(src.tensor, x0, opt.steps);
    double min_inc = std::numeric_limits<double>::infinity(), max_res = 0.0;
    for (std::size_t k = 0; k + 1 < ls.phi.size(); ++k) {
      min_inc = std::min(min_inc, ls.phi[k + 1] - ls.phi[k]);
      max_res = std::max(max_res, std::abs(ls.identity_residual[k]));
    }
    lyap = Json{{"recurrent_set", one_based(ls.recurrent_set)},
                {"phi_initial", ls.phi.front()},
                {"phi_final", ls.phi.back()},
                {"min_increment", opt.steps > 0 ? Json(min_inc) : Json(nullptr)},
                {"max_identity_residual", max_res}};
  } catch (const NotCanonical&) {
  }
  r.results = Json{{"steps", opt.steps},
                   {"converged_at", rec.converged_at ? Json(*rec.converged_at) : Json(nullptr)},
                   {"final_point", to_json(rec.points.back())},
                   {"min_step_gap", opt.steps > 0 ? Json(min_gap) : Json(nullptr)},
                   {"lyapunov", std::move(lyap)}};
  r.series = detail::make_series(src.tensor, std::move(rec.points), opt.tol);
  return r;
}

inline Report run_cesaro(const OperatorSource& src, const RunOptions& opt) {
  const auto x0 = detail::start_point(opt, src.tensor.dim());
  auto inputs = detail::base_inputs(src);
  inputs["x0"] = to_json(x0);
  inputs["steps"] = opt.steps;
  auto r = detail::make_report("cesaro", std::move(inputs));
  auto means = cesaro_means(src.tensor, x0, opt.steps);
  Json res{{"steps", opt.steps}};
  if (!means.empty()) {
    res["final_mean"] = to_json(means.back());
    const std::size_t n = means.size();
    if (n >= 2) res["half_difference"] = max_norm_distance(means[n - 1], means[n / 2 - 1]);
  }
  r.results = std::move(res);
  r.series = detail::make_series(src.tensor, std::move(means), opt.tol);
  return r;
}

inline Report run_omega(const OperatorSource& src, const RunOptions& opt) {
  const auto x0 = detail::start_point(opt, src.tensor.dim());
  const std::size_t burn_in = opt.burn_in.value_or(opt.steps / 2);
  auto inputs = detail::base_inputs(src);
  inputs["x0"] = to_json(x0);
  inputs["steps"] = opt.steps;
  inputs["burn_in"] = burn_in;
  auto r = detail::make_report("omega", std::move(inputs));
  const auto om = omega_limit(src.tensor, x0, opt.steps, burn_in);
  Json clusters = Json::array();
  for (const auto& c : om.clusters) clusters.push_back(to_json(c));
  r.results = Json{{"fixed_points", to_json(om.fixed_points)},
                   {"final_distance", om.distances.back()},
                   {"clusters", std::move(clusters)},
                   {"cluster_count", om.clusters.size()}};
  return r;
}

inline Report run_generate(const RunOptions& opt) {
  std::vector<std::size_t> tau = opt.partition.value_or(std::vector<std::size_t>(opt.m, 0));
  GeneratorSpec spec;
  spec.m = opt.m;
  spec.partition = AlphaPartition(tau);
  spec.seed = opt.seed;
  spec.max_rejections = opt.max_rejections;
  spec.check = detail::check_options(opt);
  auto r = detail::make_report(
      "generate", Json{{"m", opt.m},
                       {"partition", one_based(tau)},
                       {"seed", opt.seed},
                       {"max_rejections", opt.max_rejections},
                       {"samples", opt.samples},
                       {"restarts", opt.restarts}});
  try {
    auto g = generate(spec);
    r.results = Json{{"attempts", g.attempts},
                     {"rejections", g.rejections},
                     {"operator", to_json(OperatorDocument{
                                      kFormatVersion, g.tensor,
                                      Json{{"generator_seed", opt.seed},
                                           {"partition", one_based(tau)}}})}};
  } catch (const BudgetExhausted& e) {
    r.results = Json{{"attempts", e.attempts}, {"rejections", e.rejections}, {"operator", nullptr}};
    r.exit_code = 3;
  }
  return r;
}

inline OperatorDocument catalog_document(const CatalogEntry& e) {
  return {kFormatVersion, e.tensor, Json{{"name", e.name}, {"description", e.description}}};
}

// Lists the catalog; when export_dir is set also writes NAME.json files.
inline Report run_catalog(const std::optional<std::string>& export_dir = std::nullopt) {
  auto r = detail::make_report("catalog", Json{{"export_dir", export_dir ? Json(*export_dir)
                                                                          : Json(nullptr)}});
  Json entries = Json::array();
  for (const auto& [name, e] : catalog()) {
    Json row{{"name", name}, {"m", e.tensor.dim()}, {"description", e.description}};
    if (export_dir) {
      const auto path = (std::filesystem::path(*export_dir) / (name + ".json")).string();
      write_text_file(path, dump(to_json(catalog_document(e))));
      row["file"] = path;
    }
    entries.push_back(std::move(row));
  }
  r.results = Json{{"entries", std::move(entries)}};
  return r;
}

// Shape of a fixed-point set in the triangle: a vertex, an edge midpoint, a
// whole edge, or something else.
inline std::string triangle_shape(const FixedPointSet& f) {
  auto support = [](const SimplexPoint& p) {
    std::size_t n = 0;
    for (double v : p.coords()) n += v > 0.0;
    return n;
  };
  const auto& g = f.generators();
  if (g.size() == 1) {
    if (support(g[0]) == 1) return "vertex";
    if (support(g[0]) == 2) return "edge-midpoint";
    return "other";
  }
  if (g.size() == 2 && support(g[0]) == 1 && support(g[1]) == 1) return "edge";
  return "other";
}

// Every α-partition of {1,2,3}, `draws` generated operators each.
inline Report run_sweep_m3(const RunOptions& opt) {
  constexpr std::size_t m = 3;
  auto r = detail::make_report("sweep-m3", Json{{"seed", opt.seed},
                                                {"draws", opt.draws},
                                                {"samples", opt.samples},
                                                {"restarts", opt.restarts},
                                                {"max_rejections", opt.max_rejections}});
  Json rows = Json::array();
  std::size_t index = 0, exceptions = 0, linear_exceptions = 0, exhausted = 0, total = 0;
  for (const auto& alpha : enumerate_partitions(m)) {
    for (std::size_t d = 0; d < opt.draws; ++d, ++index) {
      GeneratorSpec spec;
      spec.m = m;
      spec.partition = alpha;
      spec.seed = derive_seed(opt.seed, index);
      spec.max_rejections = opt.max_rejections;
      spec.check = detail::check_options(opt);
      Json row{{"partition", one_based(alpha.tau())}, {"draw", d}};
      try {
        const auto g = generate(spec);
        const auto c = classify(g.tensor);
        const auto shape = triangle_shape(c.fixed_points);
        Json gens = Json::array();
        for (const auto& p : c.fixed_points.generators()) gens.push_back(to_json(p));
        row["verdict"] = to_string(c.verdict);
        row["fixed_set"] = std::move(gens);
        row["shape"] = shape;
        row["linear"] = c.linear;
        row["rejections"] = g.rejections;
        ++total;
        if (shape == "other") ++(c.linear ? linear_exceptions : exceptions);
      } catch (const BudgetExhausted& e) {
        row["verdict"] = "budget-exhausted";
        row["rejections"] = e.rejections;
        ++exhausted;
      }
      rows.push_back(std::move(row));
    }
  }
  r.results = Json{{"rows", std::move(rows)},
                   {"operators", total},
                   {"exceptions_nonlinear", exceptions},
                   {"exceptions_linear", linear_exceptions},
                   {"budget_exhausted", exhausted}};
  r.provenance["expected_shapes"] = "vertex, edge-midpoint, or edge for nonlinear operators";
  if (exhausted > 0) r.exit_code = 3;
  return r;
}

}  // namespace dqso
