#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dqso/dqso.hpp"

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof())
      throw dqso::ParseError(std::string("bad ") + what + " list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw dqso::ParseError(std::string("empty ") + what + " list");
  return out;
}

void emit(const dqso::Report& report, const std::string& out, dqso::ReportFormat format) {
  if (out.empty() || out == "-")
    std::cout << dqso::render_report(report, format);
  else
    dqso::save_report(report, out, format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis toolkit for dissipative quadratic stochastic operators"};
  app.require_subcommand(1);
  app.fallthrough();

  dqso::RunOptions opt;
  std::string out, format = "json", x0_text, partition_text, export_dir, save_operator_path;
  std::size_t burn_in = 0;
  app.add_option("--seed", opt.seed, "random seed")->capture_default_str();
  app.add_option("--samples", opt.samples, "uniform samples for the dissipativity search")
      ->capture_default_str();
  app.add_option("--restarts", opt.restarts, "local-search / fixed-point restarts")
      ->capture_default_str();
  app.add_option("--steps", opt.steps, "iteration steps")->capture_default_str();
  app.add_option("--tol", opt.tol, "diagonal-detection tolerance")->capture_default_str();
  app.add_option("--out", out, "output file (default: stdout)");
  app.add_option("--format", format, "report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  std::string operator_arg;
  auto with_operator = [&](CLI::App* sub) {
    sub->add_option("operator", operator_arg, "operator file or catalog:NAME")->required();
    return sub;
  };
  auto* validate = with_operator(app.add_subcommand("validate", "check coefficient validity"));
  auto* audit = with_operator(app.add_subcommand("audit", "audit necessary conditions"));
  auto* check = with_operator(app.add_subcommand("check", "search for majorization violations"));
  auto* classify = with_operator(app.add_subcommand("classify", "fixed-point set and verdict"));
  auto* fixed = with_operator(
      app.add_subcommand("fixed-points", "predicted versus numerically found fixed points"));
  auto* simulate = with_operator(app.add_subcommand("simulate", "iterate the operator"));
  auto* cesaro = with_operator(app.add_subcommand("cesaro", "running Cesaro means"));
  auto* omega = with_operator(app.add_subcommand("omega", "omega-limit diagnostics"));
  for (auto* sub : {simulate, cesaro, omega})
    sub->add_option("--x0", x0_text, "initial point, comma separated (default: barycenter)");
  omega->add_option("--burn-in", burn_in, "steps discarded before clustering (default: steps/2)");

  auto* gen = app.add_subcommand("generate", "sample a dissipative operator");
  gen->add_option("--m", opt.m, "dimension")->capture_default_str();
  gen->add_option("--partition", partition_text,
                  "1-based output receiving x_i^2 for each i, comma separated");
  gen->add_option("--max-rejections", opt.max_rejections)->capture_default_str();
  gen->add_option("--save-operator", save_operator_path, "also write the operator file");

  auto* cat = app.add_subcommand("catalog", "list built-in operators");
  cat->add_option("--export", export_dir, "write NAME.json operator files into this directory");

  auto* sweep = app.add_subcommand("sweep-m3", "all 27 partitions at m = 3");
  sweep->add_option("--draws", opt.draws, "operators per partition")->capture_default_str();
  sweep->add_option("--max-rejections", opt.max_rejections)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const auto fmt = format == "csv" ? dqso::ReportFormat::Csv : dqso::ReportFormat::Json;
  try {
    if (!x0_text.empty()) opt.x0 = parse_list<double>(x0_text, "coordinate");
    if (omega->parsed() && omega->count("--burn-in") > 0) opt.burn_in = burn_in;
    if (!partition_text.empty()) {
      std::vector<std::size_t> tau;
      for (auto v : parse_list<long long>(partition_text, "partition")) {
        if (v < 1) throw dqso::ParseError("partition targets are 1-based");
        tau.push_back(static_cast<std::size_t>(v - 1));
      }
      opt.partition = tau;
      if (gen->count("--m") == 0) opt.m = tau.size();
    }

    dqso::Report report;
    if (validate->parsed()) {
      report = dqso::run_validate(dqso::resolve_operator(operator_arg, false));
    } else if (gen->parsed()) {
      report = dqso::run_generate(opt);
      if (!save_operator_path.empty() && report.exit_code == 0)
        dqso::write_text_file(save_operator_path, dqso::dump(report.results["operator"]));
    } else if (cat->parsed()) {
      report = dqso::run_catalog(export_dir.empty() ? std::nullopt
                                                    : std::optional<std::string>(export_dir));
    } else if (sweep->parsed()) {
      report = dqso::run_sweep_m3(opt);
    } else {
      const auto src = dqso::resolve_operator(operator_arg);
      if (audit->parsed()) report = dqso::run_audit(src, opt);
      else if (check->parsed()) report = dqso::run_check(src, opt);
      else if (classify->parsed()) report = dqso::run_classify(src, opt);
      else if (fixed->parsed()) report = dqso::run_fixed_points(src, opt);
      else if (simulate->parsed()) report = dqso::run_simulate(src, opt);
      else if (cesaro->parsed()) report = dqso::run_cesaro(src, opt);
      else if (omega->parsed()) report = dqso::run_omega(src, opt);
    }
    emit(report, out, fmt);
    return report.exit_code;
  } catch (const dqso::BudgetExhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
