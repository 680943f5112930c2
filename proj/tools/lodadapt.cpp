// Command line front end: `run` executes an experiment, `gen-field` writes a
// coefficient in the lodadapt-field v1 format.

#include "lodadapt/config.hpp"
#include "lodadapt/darcy.hpp"
#include "lodadapt/error.hpp"
#include "lodadapt/experiments.hpp"
#include "lodadapt/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

using namespace lodadapt;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string full_variant(const std::string& name) {
  const auto dash = name.rfind('-');
  if (dash == std::string::npos || name.substr(dash + 1) != "desk")
    throw ConfigError("--full-scale needs a desk preset, got '" + name + "'");
  return name.substr(0, dash) + "-full";
}

RunConfig resolve(const std::string& config_path, std::string preset_name, const std::string& out, bool full,
                  int threads) {
  json j = json::object();
  if (!config_path.empty()) {
    j = read_json(config_path);
    if (!j.is_object())
      throw ConfigError(config_path + " must hold a JSON object");
    if (j.contains("preset")) {
      if (!j["preset"].is_string())
        throw ConfigError("'preset' must be a string");
      if (preset_name.empty())
        preset_name = j["preset"].get<std::string>();
    }
  }
  if (full) {
    if (preset_name.empty())
      throw ConfigError("--full-scale needs a preset");
    preset_name = full_variant(preset_name);
  }
  if (preset_name.empty() && config_path.empty())
    throw ConfigError("give --config and/or --preset");
  RunConfig cfg = parse_config(j, preset_name.empty() ? RunConfig{} : preset(preset_name));
  if (!out.empty())
    cfg.output_dir = out;
  if (threads >= 0)
    cfg.threads = threads;
  validate(cfg);
  return cfg;
}

int run(const RunConfig& cfg) {
  std::cerr << "lodadapt: " << cfg.name << " -> " << cfg.output_dir << " (" << resolve_threads(cfg.threads)
            << " threads)\n";
  const auto start = std::chrono::steady_clock::now();
  run_experiment(cfg, cfg.output_dir);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "lodadapt: done in " << format_double(std::round(s * 10.0) / 10.0) << " s\n";
  return 0;
}

/// Spec keys: mesh, field, optional n (sweep step) and optional saturation
/// (coarse field file; the output is then λ(s)K).
int gen_field(const std::string& spec_path, const std::string& out) {
  const json j = read_json(spec_path);
  if (!j.is_object())
    throw ConfigError(spec_path + " must hold a JSON object");
  json base = json::object();
  int n = 0;
  std::string saturation;
  for (const auto& [key, value] : j.items()) {
    if (key == "mesh" || key == "field")
      base[key] = value;
    else if (key == "n" && value.is_number_integer())
      n = value.get<int>();
    else if (key == "saturation" && value.is_string())
      saturation = value.get<std::string>();
    else
      throw ConfigError("unknown or invalid key '" + key + "' in " + spec_path);
  }
  const RunConfig cfg = parse_config(base);
  const MeshPair mesh = make_mesh(cfg.mesh);
  Coefficient a = make_field(mesh, cfg.field, n);
  if (!saturation.empty()) {
    const FieldFile s = read_field(saturation);
    bool match = s.dim == mesh.dim();
    for (int i = 0; match && i < s.dim; ++i)
      match = s.counts[i] == mesh.coarse_cells()[i];
    if (!match)
      throw ConfigError("saturation field does not match the coarse mesh");
    a = darcy_coefficient(mesh, a, Eigen::Map<const Eigen::VectorXd>(s.values.data(), s.values.size()));
  }
  write_field(out, coefficient_field(mesh, a));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Petrov-Galerkin LOD with lagging correctors"};
  app.require_subcommand(1);

  std::string config, preset_name, out;
  bool full = false;
  int threads = -1;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment");
  run_cmd->add_option("--config", config, "JSON config file");
  run_cmd->add_option("--preset", preset_name, "Preset name")
      ->check(CLI::IsMember(preset_names(true)));
  run_cmd->add_option("--out", out, "Output directory");
  run_cmd->add_flag("--full-scale", full, "Use the full-size variant of a desk preset");
  run_cmd->add_option("--threads", threads, "Worker threads (overrides LODADAPT_THREADS)")->check(CLI::NonNegativeNumber);

  std::string spec, field_out;
  CLI::App* gen_cmd = app.add_subcommand("gen-field", "Write a coefficient field file");
  gen_cmd->add_option("--spec", spec, "JSON field spec")->required();
  gen_cmd->add_option("--out", field_out, "Output field file")->required();

  CLI::App* list_cmd = app.add_subcommand("presets", "List preset names");

  CLI::App* show_cmd = app.add_subcommand("show-config", "Print the resolved config of a run as JSON");
  show_cmd->add_option("--config", config, "JSON config file");
  show_cmd->add_option("--preset", preset_name, "Preset name")->check(CLI::IsMember(preset_names(true)));
  show_cmd->add_option("--out", out, "Output directory");
  show_cmd->add_flag("--full-scale", full, "Use the full-size variant of a desk preset");
  show_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd)
      return run(resolve(config, preset_name, out, full, threads));
    if (*show_cmd) {
      std::cout << to_json(resolve(config, preset_name, out, full, threads)).dump(2) << '\n';
      return 0;
    }
    if (*gen_cmd)
      return gen_field(spec, field_out);
    if (*list_cmd) {
      for (const std::string& n : preset_names(true))
        std::cout << n << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "lodadapt: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "lodadapt: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "lodadapt: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
