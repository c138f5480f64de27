#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqso/dissipativity.hpp"
#include "dqso/io.hpp"
#include "dqso/structure.hpp"

namespace dqso {

// All indices in JSON output are 1-based.

inline Json to_json(std::span<const double> x) {
  Json a = Json::array();
  for (double v : x) a.push_back(v);
  return a;
}
inline Json to_json(const SimplexPoint& x) { return to_json(x.coords()); }

inline Json one_based(std::span<const std::size_t> idx) {
  Json a = Json::array();
  for (std::size_t i : idx) a.push_back(i + 1);
  return a;
}

inline Json to_json(const AlphaPartition& alpha) {
  Json blocks = Json::array();
  for (const auto& b : alpha.blocks()) blocks.push_back(one_based(b));
  return Json{{"tau", one_based(alpha.tau())}, {"blocks", std::move(blocks)}};
}

inline Json to_json(const AuditReport& r) {
  Json pinned = Json::array(), support = Json::array();
  for (const auto& v : r.pinned_half_violations)
    pinned.push_back(Json{{"i", v.i + 1}, {"j", v.j + 1}, {"k", v.k + 1}, {"value", v.value}});
  for (const auto& v : r.support_violations)
    support.push_back(Json{{"i", v.i + 1}, {"j", v.j + 1}, {"support", v.support_size}});
  return Json{{"passed", r.passed()},
              {"diagonal_ok", r.diagonal_ok},
              {"partition", r.partition ? to_json(*r.partition) : Json(nullptr)},
              {"pinned_half_violations", std::move(pinned)},
              {"support_violations", std::move(support)}};
}

inline Json to_json(const Counterexample& ce) {
  return Json{{"point", to_json(ce.point)},
              {"gap", ce.gap},
              {"prefix", ce.prefix},
              {"stage", to_string(ce.stage)}};
}

inline Json to_json(const DissipativityVerdict& v) {
  const bool found = v.status == DissipativityVerdict::Status::CounterexampleFound;
  return Json{{"status", found ? "CounterexampleFound" : "NoViolationFound"},
              {"counterexample", v.counterexample ? to_json(*v.counterexample) : Json(nullptr)},
              {"samples_tested", v.samples_tested},
              {"min_gap_seen", v.min_gap_seen},
              {"certificate", found ? "refutation" : "none (sampling outcome)"}};
}

inline Json to_json(const FixedPointSet& f) {
  Json gens = Json::array(), supports = Json::array();
  for (const auto& g : f.generators()) gens.push_back(to_json(g));
  for (const auto& s : f.supports()) supports.push_back(one_based(s));
  Json j{{"kind", f.kind() == FixedPointSet::Kind::Unique ? "Unique" : "Polytope"}};
  if (f.kind() == FixedPointSet::Kind::Unique) j["point"] = to_json(f.generators().front());
  j["generators"] = std::move(gens);
  j["supports"] = std::move(supports);
  return j;
}

inline Json to_json(const CycleStructure& cs) {
  Json cycles = Json::array();
  for (const auto& c : cs.cycles) cycles.push_back(one_based(c));
  return Json{{"cycles", std::move(cycles)},
              {"lengths", cs.lengths()},
              {"transient", one_based(cs.transient)}};
}

inline Json forms_json(std::span<const StructuralForm> forms) {
  Json a = Json::array();
  for (auto f : forms) a.push_back(to_string(f));
  return a;
}

inline Json to_json(const Classification& c) {
  return Json{{"verdict", to_string(c.verdict)},
              {"fixed_points", to_json(c.fixed_points)},
              {"partition", to_json(c.partition)},
              {"cycle_structure", to_json(c.cycles)},
              {"structural_forms", forms_json(c.forms)},
              {"rotating_cycle", c.has_rotating_cycle},
              {"linear", c.linear}};
}

// Per-row series for CSV output: one point per step plus gap(x, Vx) and the
// recurrent mass phi (absent when the operator has no α-partition).
struct Series {
  std::vector<SimplexPoint> points;
  std::vector<double> gap;
  std::vector<std::optional<double>> phi;
};

struct Report {
  std::string command;
  Json inputs = Json::object();
  Json results = Json::object();
  Json provenance = Json::object();
  std::optional<Series> series;
  int exit_code = 0;
};

enum class ReportFormat { Json, Csv };

inline Json to_json(const Series& s) {
  Json pts = Json::array(), phi = Json::array();
  for (const auto& p : s.points) pts.push_back(to_json(p));
  for (const auto& v : s.phi) phi.push_back(v ? Json(*v) : Json(nullptr));
  return Json{{"points", std::move(pts)}, {"gap", s.gap}, {"phi", std::move(phi)}};
}

inline Json to_json(const Report& r) {
  Json j{{"command", r.command},
         {"inputs", r.inputs},
         {"results", r.results},
         {"provenance", r.provenance},
         {"exit_code", r.exit_code}};
  if (r.series) j["series"] = to_json(*r.series);
  return j;
}

inline std::string to_csv(const Series& s) {
  if (s.points.empty()) return {};
  const std::size_t m = s.points.front().dim();
  std::string out = "step";
  for (std::size_t i = 1; i <= m; ++i) out += ",x" + std::to_string(i);
  out += ",gap,phi\n";
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    out += std::to_string(k);
    for (double v : s.points[k].coords()) out += "," + format_number(v);
    out += "," + format_number(s.gap.at(k));
    out += ",";
    if (s.phi.at(k)) out += format_number(*s.phi[k]);
    out += "\n";
  }
  return out;
}

inline std::string render_report(const Report& r, ReportFormat format) {
  if (format == ReportFormat::Json) return dump(to_json(r));
  if (!r.series) throw Error("command '" + r.command + "' produces no series for CSV output");
  return to_csv(*r.series);
}

inline void save_report(const Report& r, const std::string& path, ReportFormat format) {
  write_text_file(path, render_report(r, format));
}

}  // namespace dqso
