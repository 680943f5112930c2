// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: lodadapt_acceptance [criterion numbers...]   (default: all)

#include "lodadapt/experiments.hpp"
#include "lodadapt/io.hpp"

#include "bound_check.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>

using namespace lodadapt;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Source smooth_source(const MeshPair& mesh) {
  return Source::nodal(sample_fine(mesh, [&](const DVec& x) {
    double v = 1.0 + std::sin(3.0 * x[0]) * x[1];
    if (mesh.dim() == 3)
      v += x[2] * x[2];
    return v;
  }));
}

// 1. Global patches with both load corrections reproduce the fine solution.
void exactness(Verdict& v) {
  RunConfig cfg = preset("kconv-desk");
  cfg.mesh.coarse = {4, 4};
  cfg.mesh.refinement = {8, 8};
  const MeshPair mesh = make_mesh(cfg.mesh);
  const Coefficient a = make_field(mesh, cfg.field);
  const Source f = smooth_source(mesh);
  const FineFunction g = boundary_function(mesh);
  const LodContext ctx(mesh, f, g, 4, true);
  AdaptiveSolver solver(ctx, {.always_recompute = true, .keep_correctors = true});
  const StepResult step = solver.step(0, a);
  const FineFunction uh = solve_fine_reference(mesh, a, f, g);
  const double err = solution_errors(mesh, a, uh, g, solver.reconstruct(step.alpha), step.alpha).energy;
  v.detail << "32x32/4x4, k=4, f != 0: relative energy error " << fmt(err);
  v.require(err <= 1e-9, "energy error <= 1e-9");
}

// 2. Error decay in the patch size on the desk preset.
void k_decay(Verdict& v) {
  const auto t0 = Clock::now();
  const KconvResult r = run_kconv(preset("kconv-desk"));
  const double secs = seconds_since(t0);
  v.detail << "energy";
  for (const KconvRow& row : r.rows)
    v.detail << " k" << row.k << "=" << fmt(row.err.energy);
  v.detail << "; " << fmt(secs) << " s";
  for (size_t i = 1; i < r.rows.size(); ++i) {
    const double ratio = r.rows[i].err.energy / r.rows[i - 1].err.energy;
    v.require(ratio <= 0.7, "ratio k" + std::to_string(r.rows[i].k) + " = " + fmt(ratio));
    v.require(r.rows[i].err.l2_coarse < r.rows[i - 1].err.l2_coarse,
              "L2 coarse error decreasing at k" + std::to_string(r.rows[i].k));
  }
  v.require(r.rows.size() == 4, "k = 1..4");
  v.require(secs < 600.0, "runtime < 10 min");
}

// 3. TOL sweep: error and recompute fraction ordered in TOL, TOL = 0 equals the
// always-recompute run.
void tol_sweep(Verdict& v) {
  RunConfig cfg = preset("tolsweep-desk");
  cfg.tol_values = {0.5, 0.1, 0.05, 0.01, 0.0};
  cfg.full_recompute_run = true;
  const auto t0 = Clock::now();
  const std::vector<SweepRun> runs = run_tol_sweep(cfg);
  const double secs = seconds_since(t0);
  v.detail << "max energy / mean fraction:";
  for (size_t r = 0; r < 4; ++r)
    v.detail << " TOL " << fmt(runs[r].tol) << ": " << fmt(runs[r].max_energy()) << "/"
             << fmt(runs[r].mean_fraction());
  for (size_t r = 1; r < 4; ++r) {
    v.require(runs[r].max_energy() <= runs[r - 1].max_energy(), "max energy nonincreasing at TOL " + fmt(runs[r].tol));
    v.require(runs[r].mean_fraction() >= runs[r - 1].mean_fraction(),
              "mean fraction nondecreasing at TOL " + fmt(runs[r].tol));
  }
  double worst = 0.0;
  for (const SweepStep& s : runs[4].steps)
    worst = std::max(worst, s.full_diff);
  v.detail << "; TOL=0 vs full max diff " << fmt(worst) << "; " << fmt(secs) << " s";
  v.require(worst <= 1e-10, "TOL = 0 matches always-recompute");
  v.require(secs < 1800.0, "runtime < 30 min");
}

struct BoundSummary {
  int cases = 0;
  double slack_u = 1e300, slack_f = 1e300, slack_g = 1e300, attain = 0.0, dominance = -1e300;
};

BoundSummary bound_suite(int dim, int coarse, int refine, int perturbations, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const MeshPair mesh = testing::unit_mesh(dim, coarse, refine);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const LodContext ctx(mesh, smooth_source(mesh), boundary_function(mesh), 1);
  BoundSummary s;
  for (int element = 0; element < mesh.num_coarse_cells(); ++element)
    for (int p = 0; p < perturbations; ++p) {
      const Coefficient at = testing::perturb(rng, a);
      const testing::BoundOutcome o = testing::bound_case(ctx, element, a, at, rng, samples);
      ++s.cases;
      s.slack_u = std::min(s.slack_u, o.min_slack_u);
      s.slack_f = std::min(s.slack_f, o.slack_f);
      s.slack_g = std::min(s.slack_g, o.slack_g);
      s.attain = std::max(s.attain, o.attain_gap);
      s.dominance = std::max(s.dominance, o.dominance);
    }
  return s;
}

void report_bounds(Verdict& v, const BoundSummary& s) {
  v.detail << s.cases << " cases: min slack u/f/g " << fmt(s.slack_u) << "/" << fmt(s.slack_f) << "/"
           << fmt(s.slack_g) << ", max attainment gap " << fmt(s.attain);
  v.require(s.slack_u >= -1e-10, "e_u bound");
  v.require(s.slack_f >= -1e-10, "e_f bound");
  v.require(s.slack_g >= -1e-10, "e_g bound");
  v.require(s.attain <= 1e-8, "eigenvector attains e_u");
}

std::optional<BoundSummary> bounds2d;

const BoundSummary& bounds_2d() {
  if (!bounds2d)
    bounds2d = bound_suite(2, 4, 8, 20, 100, 4004);
  return *bounds2d;
}

// 4. Indicator bounds against independently computed corrector errors.
void indicator_bounds(Verdict& v) {
  v.detail << "4x4/32x32, ";
  report_bounds(v, bounds_2d());
}

// 5. Coarse indicators dominate the fine ones.
void dominance(Verdict& v) {
  const BoundSummary& s = bounds_2d();
  v.detail << s.cases << " cases: max e^2/E - 1 = " << fmt(s.dominance);
  v.require(s.dominance <= 1e-10, "e^2 <= E (1 + 1e-10)");
}

std::optional<DarcyResult> darcy2d;
double darcy2d_seconds = 0.0;

const DarcyResult& darcy_2d() {
  if (!darcy2d) {
    const auto t0 = Clock::now();
    darcy2d = run_darcy(preset("darcy2d-desk"));
    darcy2d_seconds = seconds_since(t0);
  }
  return *darcy2d;
}

void check_conservation(Verdict& v, const DarcyResult& r) {
  double res = 0.0, bal = 0.0, mass = 0.0;
  int steps = 0;
  for (const DarcyVariant& var : r.variants)
    for (const DarcyStepStats& s : var.steps) {
      res = std::max(res, s.conservation);
      bal = std::max(bal, s.balance);
      mass = std::max(mass, s.mass);
      ++steps;
    }
  v.detail << steps << " steps: max residual " << fmt(res) << ", balance " << fmt(bal) << ", mass " << fmt(mass);
  v.require(steps > 0, "steps were run");
  v.require(res <= 1e-10, "element residual <= 1e-10");
  v.require(bal <= 1e-12, "balance <= 1e-12");
  v.require(mass <= 1e-12, "mass balance <= 1e-12");
}

// 6. Conservation on every step of the 2D upscaling run.
void conservation(Verdict& v) { check_conservation(v, darcy_2d()); }

// 7. 2D upscaling: LOD beats coarse FEM, few recomputations, coarse δ exact.
void darcy_2d_check(Verdict& v) {
  const DarcyResult& r = darcy_2d();
  const DarcyVariant* lod = r.find(lod_variant_name(2, 0.05));
  const DarcyVariant* fem = r.find("coarse_fem");
  v.require(lod && fem, "variants present");
  if (!lod || !fem)
    return;
  const double e_lod = lod->steps.back().sat_error, e_fem = fem->steps.back().sat_error;
  double delta = 0.0;
  for (const DarcyStepStats& s : lod->steps)
    delta = std::max(delta, s.delta_mismatch);
  v.detail << "final L2 error LOD " << fmt(e_lod) << " vs coarse FEM " << fmt(e_fem) << ", mean fraction "
           << fmt(lod->mean_fraction()) << ", delta mismatch " << fmt(delta) << ", range violations "
           << lod->range_violations << "; " << fmt(darcy2d_seconds) << " s";
  v.require(e_lod < e_fem, "(a) LOD error < coarse FEM error");
  v.require(lod->mean_fraction() < 0.25, "(b) mean fraction < 25%");
  v.require(delta <= 1e-13, "(c) delta mismatch <= 1e-13");
  v.require(darcy2d_seconds < 3600.0, "runtime < 1 h");
}

double l2_difference(const MeshPair& mesh, const Saturation& a, const Saturation& b) {
  double cell = 1.0;
  for (int ax = 0; ax < mesh.dim(); ++ax)
    cell *= mesh.coarse_size()[ax];
  return std::sqrt(cell * (a - b).squaredNorm());
}

// 8. 3D upscaling: saturation differences shrink with TOL; invariants hold.
void darcy_3d_check(Verdict& v) {
  const RunConfig cfg = preset("darcy3d-desk");
  const auto t0 = Clock::now();
  const DarcyResult r = run_darcy(cfg);
  const double secs = seconds_since(t0);
  const MeshPair mesh = make_mesh(cfg.mesh);
  const DarcyVariant* a = r.find(lod_variant_name(1, 0.1));
  const DarcyVariant* b = r.find(lod_variant_name(1, 0.01));
  const DarcyVariant* c = r.find(lod_variant_name(1, 0.001));
  v.require(a && b && c, "variants present");
  if (!a || !b || !c)
    return;
  const double d1 = l2_difference(mesh, a->saturation.back(), b->saturation.back());
  const double d2 = l2_difference(mesh, b->saturation.back(), c->saturation.back());
  v.detail << "||s(0.1)-s(0.01)|| = " << fmt(d1) << ", ||s(0.01)-s(0.001)|| = " << fmt(d2) << "; ";
  v.require(std::isfinite(d1) && std::isfinite(d2), "differences finite");
  v.require(d2 < d1, "difference decreases with TOL");
  double delta = 0.0;
  for (const DarcyVariant& var : r.variants)
    for (const DarcyStepStats& s : var.steps)
      delta = std::max(delta, s.delta_mismatch);
  v.require(delta <= 1e-13, "delta mismatch <= 1e-13");
  check_conservation(v, r);
  v.detail << "; 3D bound suite ";
  const BoundSummary s = bound_suite(3, 4, 2, 3, 100, 8008);
  report_bounds(v, s);
  v.detail << ", dominance " << fmt(s.dominance) << "; " << fmt(secs) << " s";
  v.require(s.dominance <= 1e-10, "3D coarse dominance");
  v.require(secs < 3600.0, "runtime < 1 h");
}

// 9. Artifacts do not depend on the thread count.
void determinism(Verdict& v) {
  const auto root = std::filesystem::temp_directory_path() / "lodadapt_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::vector<RunConfig> configs;
  {
    RunConfig c = preset("tolsweep-desk");
    c.mesh.coarse = {8, 8};
    c.mesh.refinement = {4, 4};
    c.k = 2;
    c.steps = 6;
    c.full_recompute_run = true;
    configs.push_back(c);
  }
  {
    RunConfig c = preset("kconv-desk");
    c.mesh.coarse = {8, 8};
    c.mesh.refinement = {8, 8};
    c.k_values = {1, 2};
    configs.push_back(c);
  }
  {
    RunConfig c = preset("darcy2d-desk");
    c.mesh.coarse = {8, 8};
    c.mesh.refinement = {4, 4};
    c.darcy.steps = 20;
    c.darcy.dt = 0.002;
    c.darcy.runs = {{2, 0.01}};
    c.darcy.dump_every = 5;
    configs.push_back(c);
  }
  {
    RunConfig c = preset("darcy3d-desk");
    c.mesh.coarse = {4, 4, 4};
    c.mesh.refinement = {2, 2, 2};
    c.darcy.steps = 5;
    c.darcy.dt = 0.01;
    configs.push_back(c);
  }
  int compared = 0;
  for (const RunConfig& base : configs) {
    std::vector<std::filesystem::path> dirs;
    for (int threads : {1, 3}) {
      RunConfig c = base;
      c.threads = threads;
      dirs.push_back(root / (base.name + "_t" + std::to_string(threads)));
      run_experiment(c, dirs.back());
    }
    const auto diff = artifact_differences(dirs[0], dirs[1], {"wall_ms"});
    for (const auto& entry : std::filesystem::directory_iterator(dirs[0]))
      compared += entry.path().filename() != "metadata.json";
    for (const std::string& f : diff)
      v.require(false, base.name + "/" + f + " differs");
  }
  v.detail << compared << " artifact files compared between 1 and 3 threads";
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"exactness with global patches", exactness},
      {"error decay in k", k_decay},
      {"TOL sweep ordering", tol_sweep},
      {"indicator bounds (2D)", indicator_bounds},
      {"coarse indicator dominance", dominance},
      {"flux conservation", conservation},
      {"2D upscaling", darcy_2d_check},
      {"3D upscaling", darcy_3d_check},
      {"thread-count determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i)
    wanted.insert(std::atoi(argv[i]));
  bool all = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id))
      continue;
    Verdict v;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s criterion %d (%s): %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                v.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
