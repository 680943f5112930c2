#include "lodadapt/config.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/io.hpp"
#include "lodadapt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lodadapt {

using nlohmann::json;

namespace {

const std::vector<std::pair<Experiment, std::string>> kExperiments = {
    {Experiment::kconv, "kconv"},
    {Experiment::tol_sweep, "tol_sweep"},
    {Experiment::darcy2d, "darcy2d"},
    {Experiment::darcy3d, "darcy3d"},
    {Experiment::single_solve, "single_solve"}};

const std::vector<std::pair<ReferenceMode, std::string>> kReferences = {
    {ReferenceMode::none, "none"}, {ReferenceMode::fine_fem, "fine_fem"}, {ReferenceMode::coarse_fem, "coarse_fem"}};

const std::vector<std::pair<IndicatorMode, std::string>> kModes = {{IndicatorMode::fine, "fine"},
                                                                    {IndicatorMode::coarse, "coarse"}};

template <class E>
E parse_enum(const json& j, const std::vector<std::pair<E, std::string>>& table, const std::string& key) {
  if (!j.is_string())
    throw ConfigError("'" + key + "' must be a string");
  const std::string s = j.get<std::string>();
  for (const auto& [e, name] : table)
    if (name == s)
      return e;
  std::string options;
  for (const auto& [e, name] : table)
    options += (options.empty() ? "" : ", ") + name;
  throw ConfigError("'" + key + "' = '" + s + "' is not one of: " + options);
}

template <class E>
std::string enum_name(E e, const std::vector<std::pair<E, std::string>>& table) {
  for (const auto& [v, name] : table)
    if (v == e)
      return name;
  return "?";
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object())
    throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& j, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean())
      throw ConfigError("'" + key + "' must be true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer() || (std::is_unsigned_v<T> && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
      throw ConfigError("'" + key + "' must be an integer" + (std::is_unsigned_v<T> ? " >= 0" : ""));
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number())
      throw ConfigError("'" + key + "' must be a number");
  } else if constexpr (std::is_same_v<T, std::vector<int>>) {
    if (!j.is_array())
      throw ConfigError("'" + key + "' must be an array of integers");
    for (const json& v : j)
      if (!v.is_number_integer())
        throw ConfigError("'" + key + "' must be an array of integers");
  }
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + key + "' has the wrong type");
  }
}

MeshConfig parse_mesh(const json& j, MeshConfig m) {
  check_keys(j, {"dim", "coarse", "refinement", "dirichlet_axes"}, "mesh");
  if (j.contains("dim"))
    m.dim = get<int>(j["dim"], "mesh.dim");
  if (j.contains("coarse"))
    m.coarse = get<std::vector<int>>(j["coarse"], "mesh.coarse");
  if (j.contains("refinement"))
    m.refinement = get<std::vector<int>>(j["refinement"], "mesh.refinement");
  if (j.contains("dirichlet_axes"))
    m.dirichlet_axes = get<std::vector<int>>(j["dirichlet_axes"], "mesh.dirichlet_axes");
  return m;
}

FieldConfig parse_field(const json& j, FieldConfig f) {
  check_keys(j, {"kind", "seed", "stddev", "corr_len", "value", "path"}, "field");
  if (j.contains("kind"))
    f.kind = get<std::string>(j["kind"], "field.kind");
  if (j.contains("seed"))
    f.seed = get<std::uint64_t>(j["seed"], "field.seed");
  if (j.contains("stddev"))
    f.stddev = get<double>(j["stddev"], "field.stddev");
  if (j.contains("corr_len"))
    f.corr_len = get<double>(j["corr_len"], "field.corr_len");
  if (j.contains("value"))
    f.value = get<double>(j["value"], "field.value");
  if (j.contains("path"))
    f.path = get<std::string>(j["path"], "field.path");
  return f;
}

DarcyConfig parse_darcy(const json& j, DarcyConfig d) {
  check_keys(j,
             {"steps", "dt", "initial", "boundary_saturation", "clamp_saturation", "g_flux", "runs",
              "dump_every", "delta_check"},
             "darcy");
  if (j.contains("steps"))
    d.steps = get<int>(j["steps"], "darcy.steps");
  if (j.contains("dt"))
    d.dt = get<double>(j["dt"], "darcy.dt");
  if (j.contains("initial"))
    d.initial = get<std::string>(j["initial"], "darcy.initial");
  if (j.contains("boundary_saturation"))
    d.boundary_saturation = get<std::vector<std::array<double, 2>>>(j["boundary_saturation"], "darcy.boundary_saturation");
  if (j.contains("clamp_saturation"))
    d.clamp_saturation = get<bool>(j["clamp_saturation"], "darcy.clamp_saturation");
  if (j.contains("g_flux"))
    d.g_flux = get<std::string>(j["g_flux"], "darcy.g_flux");
  if (j.contains("dump_every"))
    d.dump_every = get<int>(j["dump_every"], "darcy.dump_every");
  if (j.contains("delta_check"))
    d.delta_check = get<bool>(j["delta_check"], "darcy.delta_check");
  if (j.contains("runs")) {
    if (!j["runs"].is_array())
      throw ConfigError("'darcy.runs' must be an array");
    d.runs.clear();
    for (const json& r : j["runs"]) {
      check_keys(r, {"k", "tol"}, "darcy.runs[]");
      LodRun run;
      if (r.contains("k"))
        run.k = get<int>(r["k"], "darcy.runs[].k");
      if (r.contains("tol"))
        run.tol = get<double>(r["tol"], "darcy.runs[].tol");
      d.runs.push_back(run);
    }
  }
  return d;
}

} // namespace

std::vector<std::string> preset_names(bool include_full) {
  std::vector<std::string> out{"kconv-desk", "tolsweep-desk", "darcy2d-desk", "darcy3d-desk"};
  if (include_full)
    for (const char* p : {"kconv-full", "tolsweep-full", "darcy2d-full", "darcy3d-full"})
      out.emplace_back(p);
  return out;
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.name = name;
  c.output_dir = "out/" + name;
  const bool full = name.size() > 5 && name.substr(name.size() - 5) == "-full";
  c.full_scale = full;
  const std::string base = name.substr(0, name.rfind('-'));
  const std::string scale = name.substr(name.rfind('-') + 1);
  if (scale != "desk" && scale != "full")
    throw ConfigError("unknown preset '" + name + "'");
  if (base == "kconv") {
    c.experiment = Experiment::kconv;
    c.mesh.coarse = full ? std::vector<int>{64, 64} : std::vector<int>{16, 16};
    c.mesh.refinement = full ? std::vector<int>{8, 8} : std::vector<int>{16, 16};
    c.field.kind = "checkerboard";
    c.k_values = {1, 2, 3, 4};
    c.reference = ReferenceMode::fine_fem;
  } else if (base == "tolsweep") {
    c.experiment = Experiment::tol_sweep;
    c.mesh.coarse = full ? std::vector<int>{64, 64} : std::vector<int>{16, 16};
    c.mesh.refinement = {8, 8};
    c.field.kind = "sweep";
    c.k = 3;
    c.tol_values = {0.5, 0.1, 0.05, 0.01};
    c.steps = 128;
    c.indicator_mode = IndicatorMode::fine;
    c.reference = ReferenceMode::fine_fem;
  } else if (base == "darcy2d") {
    c.experiment = Experiment::darcy2d;
    c.mesh.coarse = full ? std::vector<int>{64, 64} : std::vector<int>{16, 16};
    c.mesh.refinement = {8, 8};
    c.field.kind = "lognormal";
    c.field.stddev = 3.0;
    c.field.corr_len = 0.05;
    c.indicator_mode = IndicatorMode::coarse;
    c.boundary_load = "lagging";
    c.reference = ReferenceMode::coarse_fem;
    c.darcy.steps = full ? 2000 : 200;
    c.darcy.dt = 1.0 / c.darcy.steps;
    c.darcy.initial = "zero";
    c.darcy.boundary_saturation = {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    if (full) {
      c.darcy.runs.clear();
      for (int k : {1, 2, 3})
        for (double tol : {0.4, 0.2, 0.1, 0.05, 0.025, 0.0125})
          c.darcy.runs.push_back({k, tol});
      c.darcy.dump_every = 500;
    } else {
      c.darcy.runs = {{2, 0.05}};
      c.darcy.dump_every = 50;
    }
  } else if (base == "darcy3d") {
    c.experiment = Experiment::darcy3d;
    c.mesh.dim = 3;
    c.mesh.coarse = full ? std::vector<int>{16, 16, 16} : std::vector<int>{8, 8, 8};
    c.mesh.refinement = {8, 8, 8};
    if (!full)
      c.mesh.refinement = {4, 4, 4};
    c.field.kind = "product3d";
    c.indicator_mode = IndicatorMode::coarse;
    c.boundary_load = "lagging";
    c.reference = ReferenceMode::none;
    c.darcy.steps = full ? 200 : 50;
    c.darcy.dt = 1.0;
    c.darcy.initial = "sphere";
    c.darcy.boundary_saturation = {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    c.darcy.runs = full ? std::vector<LodRun>{{1, 0.1}, {2, 0.1}, {1, 0.01}}
                         : std::vector<LodRun>{{1, 0.1}, {1, 0.01}, {1, 0.001}};
    c.darcy.dump_every = full ? 50 : 10;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

RunConfig parse_config(const json& j, RunConfig c) {
  check_keys(j,
             {"name", "experiment", "mesh", "field", "k", "k_values", "tol_values", "indicator_mode",
              "include_rhs_correction", "reference", "steps", "full_recompute_run", "write_masks",
              "write_indicators", "squared_threshold", "boundary_load", "darcy", "threads", "output_dir", "full_scale", "preset"},
             "config");
  if (j.contains("name"))
    c.name = get<std::string>(j["name"], "name");
  if (j.contains("experiment"))
    c.experiment = parse_enum(j["experiment"], kExperiments, "experiment");
  if (j.contains("mesh"))
    c.mesh = parse_mesh(j["mesh"], c.mesh);
  if (j.contains("field"))
    c.field = parse_field(j["field"], c.field);
  if (j.contains("k"))
    c.k = get<int>(j["k"], "k");
  if (j.contains("k_values"))
    c.k_values = get<std::vector<int>>(j["k_values"], "k_values");
  if (j.contains("tol_values"))
    c.tol_values = get<std::vector<double>>(j["tol_values"], "tol_values");
  if (j.contains("boundary_load"))
    c.boundary_load = get<std::string>(j["boundary_load"], "boundary_load");
  if (j.contains("squared_threshold"))
    c.squared_threshold = get<bool>(j["squared_threshold"], "squared_threshold");
  if (j.contains("indicator_mode"))
    c.indicator_mode = parse_enum(j["indicator_mode"], kModes, "indicator_mode");
  if (j.contains("include_rhs_correction"))
    c.include_rhs_correction = get<bool>(j["include_rhs_correction"], "include_rhs_correction");
  if (j.contains("reference"))
    c.reference = parse_enum(j["reference"], kReferences, "reference");
  if (j.contains("steps"))
    c.steps = get<int>(j["steps"], "steps");
  if (j.contains("full_recompute_run"))
    c.full_recompute_run = get<bool>(j["full_recompute_run"], "full_recompute_run");
  if (j.contains("write_masks"))
    c.write_masks = get<bool>(j["write_masks"], "write_masks");
  if (j.contains("write_indicators"))
    c.write_indicators = get<bool>(j["write_indicators"], "write_indicators");
  if (j.contains("darcy"))
    c.darcy = parse_darcy(j["darcy"], c.darcy);
  if (j.contains("threads"))
    c.threads = get<int>(j["threads"], "threads");
  if (j.contains("output_dir"))
    c.output_dir = get<std::string>(j["output_dir"], "output_dir");
  if (j.contains("full_scale"))
    c.full_scale = get<bool>(j["full_scale"], "full_scale");
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  json runs = json::array();
  for (const LodRun& r : c.darcy.runs)
    runs.push_back({{"k", r.k}, {"tol", r.tol}});
  return {
      {"name", c.name},
      {"experiment", enum_name(c.experiment, kExperiments)},
      {"mesh",
       {{"dim", c.mesh.dim},
        {"coarse", c.mesh.coarse},
        {"refinement", c.mesh.refinement},
        {"dirichlet_axes", c.mesh.dirichlet_axes}}},
      {"field",
       {{"kind", c.field.kind},
        {"seed", c.field.seed},
        {"stddev", c.field.stddev},
        {"corr_len", c.field.corr_len},
        {"value", c.field.value},
        {"path", c.field.path}}},
      {"k", c.k},
      {"k_values", c.k_values},
      {"tol_values", c.tol_values},
      {"indicator_mode", enum_name(c.indicator_mode, kModes)},
      {"include_rhs_correction", c.include_rhs_correction},
      {"reference", enum_name(c.reference, kReferences)},
      {"steps", c.steps},
      {"full_recompute_run", c.full_recompute_run},
      {"write_masks", c.write_masks},
      {"write_indicators", c.write_indicators},
      {"squared_threshold", c.squared_threshold},
      {"boundary_load", c.boundary_load},
      {"darcy",
       {{"steps", c.darcy.steps},
        {"dt", c.darcy.dt},
        {"initial", c.darcy.initial},
        {"boundary_saturation", c.darcy.boundary_saturation},
        {"clamp_saturation", c.darcy.clamp_saturation},
        {"g_flux", c.darcy.g_flux},
        {"runs", runs},
        {"dump_every", c.darcy.dump_every},
        {"delta_check", c.darcy.delta_check}}},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
      {"full_scale", c.full_scale},
  };
}

void validate(const RunConfig& c) {
  const MeshConfig& m = c.mesh;
  if (m.dim < 1 || m.dim > 3)
    throw ConfigError("mesh.dim must be 1, 2 or 3");
  if (static_cast<int>(m.coarse.size()) != m.dim || static_cast<int>(m.refinement.size()) != m.dim)
    throw ConfigError("mesh.coarse and mesh.refinement need one entry per dimension");
  for (int v : m.coarse)
    if (v < 1)
      throw ConfigError("mesh.coarse entries must be >= 1");
  for (int v : m.refinement)
    if (v < 1)
      throw ConfigError("mesh.refinement entries must be >= 1");
  for (int a : m.dirichlet_axes)
    if (a < 0 || a >= m.dim)
      throw ConfigError("mesh.dirichlet_axes entry out of range");
  if (c.k < 0)
    throw ConfigError("k must be >= 0");
  for (int k : c.k_values)
    if (k < 0)
      throw ConfigError("k_values entries must be >= 0");
  for (double t : c.tol_values)
    if (!(t >= 0.0))
      throw ConfigError("tol_values entries must be >= 0");
  if (c.steps < 1)
    throw ConfigError("steps must be >= 1");
  if (c.threads < 0)
    throw ConfigError("threads must be >= 0");
  const DarcyConfig& d = c.darcy;
  if (d.steps < 1)
    throw ConfigError("darcy.steps (N) must be >= 1");
  if (!(d.dt > 0.0))
    throw ConfigError("darcy.dt must be positive");
  if (d.initial != "zero" && d.initial != "sphere")
    throw ConfigError("darcy.initial must be 'zero' or 'sphere'");
  if (c.boundary_load != "true" && c.boundary_load != "lagging")
    throw ConfigError("boundary_load must be 'true' or 'lagging'");
  if (d.g_flux != "lagging" && d.g_flux != "true")
    throw ConfigError("darcy.g_flux must be 'lagging' or 'true'");
  if (d.boundary_saturation.size() < static_cast<size_t>(m.dim))
    throw ConfigError("darcy.boundary_saturation needs one [lower, upper] pair per axis");
  for (const LodRun& r : d.runs)
    if (r.k < 0 || !(r.tol >= 0.0))
      throw ConfigError("darcy.runs entries need k >= 0 and tol >= 0");
  if (d.dump_every < 0)
    throw ConfigError("darcy.dump_every must be >= 0");
  static const std::set<std::string> kinds{"checkerboard", "sweep", "lognormal", "product3d", "constant", "file"};
  if (!kinds.count(c.field.kind))
    throw ConfigError("unknown field kind '" + c.field.kind + "'");
  if ((c.field.kind == "checkerboard" || c.field.kind == "sweep" || c.field.kind == "lognormal") && m.dim != 2)
    throw ConfigError("field kind '" + c.field.kind + "' needs a 2D mesh");
  if (c.field.kind == "product3d" && m.dim != 3)
    throw ConfigError("field kind 'product3d' needs a 3D mesh");
  if (c.field.kind == "lognormal" && !(c.field.stddev >= 0.0 && c.field.corr_len > 0.0))
    throw ConfigError("lognormal field needs stddev >= 0 and corr_len > 0");
  if (c.field.kind == "constant" && !(c.field.value > 0.0))
    throw ConfigError("constant field needs a positive value");
  if (c.field.kind == "file" && c.field.path.empty())
    throw ConfigError("field kind 'file' needs a path");
  if ((c.experiment == Experiment::darcy2d && m.dim != 2) || (c.experiment == Experiment::darcy3d && m.dim != 3))
    throw ConfigError("darcy2d/darcy3d need a 2D/3D mesh");
  if (c.experiment == Experiment::tol_sweep && c.field.kind != "sweep")
    throw ConfigError("tol_sweep needs field kind 'sweep'");
}

MeshPair make_mesh(const MeshConfig& m) {
  return build_mesh_pair(m.dim, std::vector<std::pair<double, double>>(m.dim, {0.0, 1.0}), m.coarse, m.refinement,
                         m.dirichlet_axes);
}

Coefficient make_field(const MeshPair& mesh, const FieldConfig& f, int n) {
  if (f.kind == "checkerboard")
    return checkerboard_base(mesh, f.seed);
  if (f.kind == "sweep")
    return sweep_coefficient(mesh, checkerboard_base(mesh, f.seed), n);
  if (f.kind == "lognormal")
    return lognormal_field(mesh, f.stddev, f.corr_len, f.seed);
  if (f.kind == "product3d")
    return product_field_3d(mesh, f.seed);
  if (f.kind == "constant")
    return Coefficient(mesh.fine_cell_box(), std::vector<double>(mesh.num_fine_cells(), f.value));
  if (f.kind == "file")
    return field_coefficient(mesh, read_field(f.path));
  throw ConfigError("unknown field kind '" + f.kind + "'");
}

FineFunction boundary_function(const MeshPair& mesh) {
  return sample_fine(mesh, [](const DVec& x) { return 1.0 - x[0]; });
}

int resolve_threads(int configured) { return configured > 0 ? configured : default_thread_count(); }

} // namespace lodadapt
