#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stallsched/capacity.hpp"
#include "stallsched/harness.hpp"
#include "stallsched/model.hpp"
#include "stallsched/spec_file.hpp"
#include "stallsched/svg_plot.hpp"

namespace {

using namespace stallsched;

std::string resolve_out_dir(const ExperimentSpec& spec, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!spec.output_dir.empty()) return spec.output_dir;
  return "out/" + spec.name;
}

void print_written(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cout << p << "\n";
}

int cmd_run(const std::string& spec_path, const std::string& out_flag) {
  const ExperimentSpec spec = load_spec_file(spec_path);
  const ExperimentResult result = spec.sweep.has_value()
                                      ? run_sweep(spec, *spec.sweep)
                                      : run_experiment(spec);
  print_written(write_outputs(result, resolve_out_dir(spec, out_flag)));
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& axis,
              const std::string& values_csv, const std::string& out_flag) {
  const ExperimentSpec spec = load_spec_file(spec_path);
  SweepPlan plan = spec.sweep.value_or(SweepPlan{});
  if (!axis.empty()) plan.axis = axis;
  if (!values_csv.empty()) {
    plan.values.clear();
    std::istringstream in(values_csv);
    std::string field;
    while (std::getline(in, field, ',')) {
      try {
        std::size_t pos = 0;
        plan.values.push_back(std::stod(field, &pos));
        if (pos != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ValidationError("bad sweep value '" + field + "'");
      }
    }
  }
  if (plan.axis.empty() || plan.values.empty())
    throw ValidationError(
        "no sweep plan: pass --axis and --values or add a [sweep] section");
  print_written(write_outputs(run_sweep(spec, plan),
                              resolve_out_dir(spec, out_flag)));
  return 0;
}

int cmd_capacity(const std::string& spec_path) {
  const ExperimentSpec spec = load_spec_file(spec_path);
  validate_experiment_spec(spec);
  if (std::holds_alternative<TraceLaw>(spec.arrivals))
    throw ValidationError("capacity needs a rate-based workload, not a trace");
  MaximalSetCache cache;
  const MaterializedWorkload w = materialize_workload(spec, cache);
  std::cout << "t_star = " << format_double(w.t_star) << "\n";
  for (std::size_t j = 0; j < w.types.size(); ++j)
    std::cout << "lambda[" << w.types[j].name
              << "] = " << format_double(w.lambda[j]) << "\n";
  return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& out_flag) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + csv_path);
  std::ostringstream text;
  text << in.rdbuf();
  const std::string svg = render_line_chart(chart_from_csv(text.str()));
  std::filesystem::path out =
      out_flag.empty() ? std::filesystem::path(csv_path).replace_extension(".svg")
                       : std::filesystem::path(out_flag);
  std::ofstream sink(out, std::ios::binary);
  if (!sink) throw ValidationError("cannot write " + out.string());
  sink << svg;
  std::cout << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment runner for stall-aware VM scheduling policies"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, axis, values;

  auto* run = app.add_subcommand("run", "run an experiment spec");
  run->add_option("spec", spec_path, "spec file")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run a spec across an axis");
  sweep->add_option("spec", spec_path, "spec file")->required();
  sweep->add_option("--axis", axis, "sweep axis: servers or zeta");
  sweep->add_option("--values", values, "comma-separated axis values");
  sweep->add_option("--out", out_dir, "output directory");

  auto* capacity = app.add_subcommand("capacity", "print t_star and arrival rates");
  capacity->add_option("spec", spec_path, "spec file")->required();

  auto* plot = app.add_subcommand("plot", "render a results CSV as an SVG chart");
  plot->add_option("csv", spec_path, "summary or timeseries CSV")->required();
  plot->add_option("--out", out_dir, "output SVG path");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(spec_path, out_dir);
    if (sweep->parsed()) return cmd_sweep(spec_path, axis, values, out_dir);
    if (capacity->parsed()) return cmd_capacity(spec_path);
    if (plot->parsed()) return cmd_plot(spec_path, out_dir);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
