#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "maqm/experiment.hpp"
#include "maqm/format.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw maqm::ConfigError(0, "", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("--values: '" + item + "' is not a number");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplexed atomic quantum memory transfer simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "json", param, values_text;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", out_path, "Output file (default: stdout)");
    sub->add_option("--seed", seed, "Override the config seed");
  };

  auto* run = app.add_subcommand("run", "Run both stages and print the report");
  add_common(run);
  run->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* compile = app.add_subcommand("compile", "Compile the pulse schedule to JSON Lines");
  add_common(compile);

  auto* sweep = app.add_subcommand("sweep", "Re-run the experiment over values of one parameter");
  add_common(sweep);
  sweep->add_option("--param", param, "JSON pointer of a numeric config value, e.g. /detection/dark_rate")
      ->required();
  sweep->add_option("--values", values_text, "Comma-separated values")->required();
  sweep->add_option("--format", format, "csv (default) or json")->check(CLI::IsMember({"json", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = maqm::load_config(config_path);
      if (seed) cfg.seed = *seed;
      const auto report = maqm::run_experiment(cfg);
      write_output(out_path, format == "csv" ? maqm::csv_header() + "\n" + maqm::csv_row(report) + "\n"
                                             : maqm::to_json(report));
      return 0;
    }
    if (*compile) {
      auto cfg = maqm::load_config(config_path);
      const auto schedule = maqm::compile_only(cfg);
      write_output(out_path, maqm::emit_jsonl(schedule));
      for (const auto& v : schedule.violations) {
        std::cerr << (v.severity == maqm::Severity::error ? "error" : "warning") << ": "
                  << maqm::to_string(v.kind) << ": " << v.message << '\n';
      }
      return schedule.valid() ? 0 : kExitInvalid;
    }
    const auto rows = maqm::sweep(read_file(config_path), param, parse_values(values_text), seed);
    if (sweep->count("--format") > 0 && format == "json") {
      std::string text = "[\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        text += maqm::to_json(rows[i].report);
        if (i + 1 < rows.size()) text.insert(text.size() - 1, ",");
      }
      write_output(out_path, text + "]\n");
    } else {
      write_output(out_path, maqm::sweep_csv(param, rows));
    }
    return 0;
  } catch (const maqm::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
