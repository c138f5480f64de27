#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dqso/errors.hpp"
#include "dqso/qso.hpp"

namespace dqso {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "1.0";

inline std::string describe(const ValidationIssue& issue) {
  std::ostringstream os;
  os << "pair (" << issue.i + 1 << "," << issue.j + 1 << ")";
  switch (issue.kind) {
    case ValidationIssue::Kind::Negative:
      os << ": negative coefficient " << issue.value << " at k=" << issue.k + 1;
      break;
    case ValidationIssue::Kind::NonFinite:
      os << ": non-finite coefficient at k=" << issue.k + 1;
      break;
    case ValidationIssue::Kind::RowSum:
      os << ": coefficients sum to " << issue.value << " instead of 1";
      break;
  }
  return os.str();
}

struct ValidationError : Error {
  explicit ValidationError(ValidationReport r)
      : Error(summary(r)), report(std::move(r)) {}
  ValidationReport report;

 private:
  static std::string summary(const ValidationReport& r) {
    std::string s = "operator fails validation";
    for (const auto& issue : r.issues) s += "; " + describe(issue);
    return s;
  }
};

inline const char* to_string(ValidationIssue::Kind k) {
  switch (k) {
    case ValidationIssue::Kind::Negative: return "negative";
    case ValidationIssue::Kind::NonFinite: return "non-finite";
    case ValidationIssue::Kind::RowSum: return "row-sum";
  }
  return "?";
}

inline Json to_json(const ValidationReport& r) {
  Json issues = Json::array();
  for (const auto& issue : r.issues) {
    Json e{{"kind", to_string(issue.kind)}, {"i", issue.i + 1}, {"j", issue.j + 1}};
    if (issue.kind != ValidationIssue::Kind::RowSum) e["k"] = issue.k + 1;
    e["value"] = issue.value;
    issues.push_back(std::move(e));
  }
  return Json{{"ok", r.ok()}, {"issues", std::move(issues)}};
}

// On-disk operator: 1-based entries (i <= j) listing the nonzero p_{ij,k}.
struct OperatorDocument {
  std::string format_version = kFormatVersion;
  HeredityTensor tensor{2};
  Json metadata = Json::object();
};

inline Json to_json(const OperatorDocument& doc) {
  const auto& t = doc.tensor;
  const std::size_t m = t.dim();
  Json entries = Json::array();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        if (const double v = t(i, j, k); v != 0.0)
          entries.push_back(Json{{"i", i + 1}, {"j", j + 1}, {"k", k + 1}, {"value", v}});
  return Json{{"format_version", doc.format_version},
              {"m", m},
              {"entries", std::move(entries)},
              {"metadata", doc.metadata}};
}

namespace detail {

inline std::size_t index_field(const Json& entry, const char* key, std::size_t m) {
  if (!entry.contains(key) || !entry[key].is_number_integer())
    throw ParseError(std::string("entry field '") + key + "' must be an integer");
  const auto v = entry[key].get<long long>();
  if (v < 1 || static_cast<std::size_t>(v) > m)
    throw ParseError(std::string("entry field '") + key + "' out of range 1.." +
                     std::to_string(m));
  return static_cast<std::size_t>(v - 1);
}

}  // namespace detail

// Structural parse only; coefficient validity is checked by load_operator.
inline OperatorDocument parse_operator(const Json& j) {
  if (!j.is_object()) throw ParseError("operator document must be a JSON object");
  OperatorDocument doc;
  if (!j.contains("format_version") || !j["format_version"].is_string())
    throw ParseError("missing format_version");
  doc.format_version = j["format_version"].get<std::string>();
  if (doc.format_version != kFormatVersion)
    throw ParseError("unsupported format_version " + doc.format_version);
  if (!j.contains("m") || !j["m"].is_number_integer() || j["m"].get<long long>() < 2)
    throw ParseError("field 'm' must be an integer >= 2");
  const auto m = static_cast<std::size_t>(j["m"].get<long long>());
  if (!j.contains("entries") || !j["entries"].is_array())
    throw ParseError("field 'entries' must be an array");

  HeredityTensor t(m);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& e : j["entries"]) {
    if (!e.is_object()) throw ParseError("each entry must be an object");
    const auto i = detail::index_field(e, "i", m);
    const auto jj = detail::index_field(e, "j", m);
    const auto k = detail::index_field(e, "k", m);
    if (i > jj) throw ParseError("entry has i > j; only the upper half i <= j is stored");
    if (!e.contains("value") || !e["value"].is_number())
      throw ParseError("entry value must be a number");
    if (!seen.emplace(i, jj, k).second)
      throw ParseError("duplicate entry (" + std::to_string(i + 1) + "," +
                       std::to_string(jj + 1) + "," + std::to_string(k + 1) + ")");
    t.set(i, jj, k, e["value"].get<double>());
  }
  doc.tensor = std::move(t);
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) throw ParseError("metadata must be an object");
    doc.metadata = j["metadata"];
  }
  return doc;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline OperatorDocument load_operator_document(const std::string& path) {
  auto doc = parse_operator(read_json_file(path));
  if (auto report = validate(doc.tensor); !report.ok()) throw ValidationError(std::move(report));
  return doc;
}

inline HeredityTensor load_operator(const std::string& path) {
  return load_operator_document(path).tensor;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void save_operator(const std::string& path, const HeredityTensor& t,
                          Json metadata = Json::object()) {
  write_text_file(path, dump(to_json(OperatorDocument{kFormatVersion, t, std::move(metadata)})));
}

// Shortest decimal form that reads back to the same double; locale-free.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace dqso
