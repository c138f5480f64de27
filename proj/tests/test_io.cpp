#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "dqso/generator.hpp"
#include "dqso/io.hpp"
#include "dqso/pipeline.hpp"
#include "dqso/report.hpp"
#include "oracles.hpp"

using namespace dqso;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
  return std::string(DQSO_FIXTURE_DIR) + "/" + name + ".json";
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dqso_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

Json basic_document() { return to_json(OperatorDocument{kFormatVersion, basic_example(), {}}); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(OperatorFile, RoundTripIsBitExact) {
  std::mt19937_64 g(51);
  for (int c = 0; c < 200; ++c) {
    const std::size_t m = 2 + c % 5;
    HeredityTensor t(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) {
        const auto a = oracle::random_simplex(g, m);
        for (std::size_t k = 0; k < m; ++k) t.set(i, j, k, a[k]);
      }
    const auto path = temp_file("roundtrip.json").string();
    save_operator(path, t, Json{{"case", c}});
    const auto doc = parse_operator(read_json_file(path));
    ASSERT_EQ(doc.tensor, t) << c;  // exact double equality, coefficient by coefficient
    ASSERT_EQ(doc.metadata["case"], c);
  }
}

TEST(OperatorFile, EntriesAreOneBasedUpperHalf) {
  const auto j = basic_document();
  EXPECT_EQ(j["format_version"], "1.0");
  EXPECT_EQ(j["m"], 3);
  for (const auto& e : j["entries"]) {
    EXPECT_GE(e["i"].get<int>(), 1);
    EXPECT_LE(e["i"].get<int>(), e["j"].get<int>());
    EXPECT_NE(e["value"].get<double>(), 0.0);
  }
  // p_{11,1} = 1
  EXPECT_EQ(j["entries"][0], (Json{{"i", 1}, {"j", 1}, {"k", 1}, {"value", 1.0}}));
}

TEST(OperatorFile, MissingTriplesDefaultToZero) {
  Json j{{"format_version", "1.0"},
         {"m", 2},
         {"entries", {{{"i", 1}, {"j", 1}, {"k", 1}, {"value", 1}},
                      {{"i", 1}, {"j", 2}, {"k", 1}, {"value", 1}},
                      {{"i", 2}, {"j", 2}, {"k", 1}, {"value", 1}}}}};
  const auto t = parse_operator(j).tensor;
  EXPECT_EQ(t(0, 1, 1), 0.0);
  EXPECT_EQ(t(1, 1, 0), 1.0);
  EXPECT_TRUE(validate(t).ok());
}

TEST(OperatorFile, StructuralErrors) {
  auto dup = basic_document();
  dup["entries"].push_back(dup["entries"][0]);
  EXPECT_THROW(parse_operator(dup), ParseError);

  auto lower = basic_document();
  lower["entries"].push_back(Json{{"i", 2}, {"j", 1}, {"k", 1}, {"value", 0.0}});
  EXPECT_THROW(parse_operator(lower), ParseError);

  auto range = basic_document();
  range["entries"][0]["k"] = 4;
  EXPECT_THROW(parse_operator(range), ParseError);

  auto zero = basic_document();
  zero["entries"][0]["i"] = 0;
  EXPECT_THROW(parse_operator(zero), ParseError);

  auto version = basic_document();
  version["format_version"] = "2.0";
  EXPECT_THROW(parse_operator(version), ParseError);

  auto nom = basic_document();
  nom.erase("m");
  EXPECT_THROW(parse_operator(nom), ParseError);

  auto text = basic_document();
  text["entries"][0]["value"] = "1";
  EXPECT_THROW(parse_operator(text), ParseError);

  EXPECT_THROW(parse_operator(Json::array()), ParseError);
}

TEST(OperatorFile, UnreadableOrMalformedFile) {
  EXPECT_THROW(load_operator("/nonexistent/dir/op.json"), ParseError);
  const auto path = temp_file("broken.json").string();
  write_text_file(path, "{\"format_version\": \"1.0\", \"m\": ");
  EXPECT_THROW(load_operator(path), ParseError);
}

TEST(OperatorFile, RowSumFailureNamesPair) {
  auto t = basic_example();
  t.set(0, 1, 1, 0.4);  // a_12 sums to 0.9
  const auto path = temp_file("rowsum.json").string();
  save_operator(path, t);
  try {
    load_operator(path);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.report.issues.size(), 1u);
    EXPECT_EQ(e.report.issues[0].kind, ValidationIssue::Kind::RowSum);
    EXPECT_NE(std::string(e.what()).find("pair (1,2)"), std::string::npos) << e.what();
  }
}

TEST(Fixtures, MatchCatalogExactly) {
  for (const auto& [name, e] : catalog()) {
    const auto doc = load_operator_document(fixture(name));
    EXPECT_EQ(doc.tensor, e.tensor) << name;
    EXPECT_EQ(doc.metadata["name"], name);
  }
}

TEST(Fixtures, Example1ClassifiesUnique) {
  const auto t = load_operator(fixture("example1"));
  const auto c = classify(t);
  ASSERT_EQ(c.fixed_points.kind(), FixedPointSet::Kind::Unique);
  EXPECT_EQ(c.fixed_points.generators()[0].values(), (std::vector<double>{0, 0, 1}));
}

TEST(Reports, ClassifyExample3Json) {
  const auto r = run_classify(resolve_operator(fixture("example3")), RunOptions{});
  const auto j = Json::parse(render_report(r, ReportFormat::Json));
  EXPECT_EQ(j["command"], "classify");
  EXPECT_EQ(j["results"]["fixed_points"]["kind"], "Unique");
  EXPECT_EQ(j["results"]["fixed_points"]["point"], (Json{0.5, 0.0, 0.5}));
  EXPECT_EQ(j["results"]["verdict"], "Regular");
  EXPECT_EQ(j["results"]["rotating_cycle"], true);
  EXPECT_EQ(j["provenance"]["tool"], kToolVersion);
  EXPECT_EQ(r.exit_code, 0);
}

TEST(Reports, SimulateZeroStepsIsSingleRow) {
  RunOptions opt;
  opt.steps = 0;
  opt.x0 = std::vector<double>{0.5, 0.25, 0.25};
  const auto r = run_simulate(resolve_operator("catalog:basic"), opt);
  const auto l = lines(render_report(r, ReportFormat::Csv));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "step,x1,x2,x3,gap,phi");
  EXPECT_EQ(l[1].substr(0, 17), "0,0.5,0.25,0.25,0");
}

TEST(Reports, CsvRowsMatchSeries) {
  RunOptions opt;
  opt.steps = 20;
  const auto r = run_simulate(resolve_operator("catalog:example1"), opt);
  const auto l = lines(render_report(r, ReportFormat::Csv));
  ASSERT_EQ(l.size(), 22u);
  // Each numeric field reads back to the exact double in the series.
  for (std::size_t k = 0; k <= 20; ++k) {
    std::istringstream row(l[k + 1]);
    std::string field;
    std::getline(row, field, ',');
    ASSERT_EQ(std::stoul(field), k);
    for (std::size_t i = 0; i < 3; ++i) {
      std::getline(row, field, ',');
      ASSERT_EQ(std::strtod(field.c_str(), nullptr), r.series->points[k][i]);
    }
    std::getline(row, field, ',');
    ASSERT_EQ(std::strtod(field.c_str(), nullptr), r.series->gap[k]);
    std::getline(row, field, ',');
    ASSERT_EQ(std::strtod(field.c_str(), nullptr), *r.series->phi[k]);
  }
}

TEST(Reports, CsvPhiBlankWithoutPartition) {
  std::mt19937_64 g(52);
  HeredityTensor t(3);  // no unit diagonal, so no recurrent set
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i; j < 3; ++j) {
      const auto a = oracle::random_simplex(g, 3);
      for (std::size_t k = 0; k < 3; ++k) t.set(i, j, k, a[k]);
    }
  const auto path = temp_file("nopartition.json").string();
  save_operator(path, t);
  RunOptions opt;
  opt.steps = 2;
  const auto r = run_simulate(resolve_operator(path), opt);
  const auto l = lines(render_report(r, ReportFormat::Csv));
  EXPECT_EQ(l[1].back(), ',');
  const auto v = run_validate(resolve_operator("catalog:basic"));
  EXPECT_THROW(render_report(v, ReportFormat::Csv), Error);
}

TEST(Reports, SaveReportWritesRenderedText) {
  const auto r = run_validate(resolve_operator("catalog:volterra"));
  const auto path = temp_file("report.json").string();
  save_report(r, path, ReportFormat::Json);
  EXPECT_EQ(read_json_file(path), Json::parse(render_report(r, ReportFormat::Json)));
}

TEST(Reports, ValidateReportListsIssues) {
  auto t = basic_example();
  t.set(0, 1, 1, 0.4);
  const auto path = temp_file("invalid.json").string();
  save_operator(path, t);
  const auto r = run_validate(resolve_operator(path, false));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.results["ok"], false);
  EXPECT_EQ(r.results["issues"][0]["kind"], "row-sum");
  EXPECT_EQ(r.results["issues"][0]["i"], 1);
  EXPECT_EQ(r.results["issues"][0]["j"], 2);
}

TEST(Reports, UnknownCatalogEntry) {
  EXPECT_THROW(resolve_operator("catalog:nope"), ParseError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  const double third = 1.0 / 3.0;
  EXPECT_EQ(std::strtod(format_number(third).c_str(), nullptr), third);
}
