#include "lodadapt/experiments.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/interp.hpp"
#include "lodadapt/io.hpp"

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

namespace lodadapt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Source zero_source() { return Source::zero(); }

} // namespace

SolutionErrors solution_errors(const MeshPair& mesh, const Coefficient& a, const FineFunction& uh,
                               const FineFunction& g, const FineFunction& u, const CoarseFunction& alpha) {
  SolutionErrors e;
  e.energy = norms(mesh, uh - u, a).energy / norms(mesh, uh + g, a).energy;
  e.l2_coarse = norms(mesh, prolongate(mesh, CoarseFunction(interpolate(mesh, uh) - alpha)), a).l2;
  return e;
}

double SweepRun::max_energy() const {
  double m = 0.0;
  for (const SweepStep& s : steps)
    m = std::max(m, s.err.energy);
  return m;
}

double SweepRun::mean_fraction() const {
  double s = 0.0;
  for (const SweepStep& st : steps)
    s += st.fraction;
  return steps.empty() ? 0.0 : s / steps.size();
}

KconvResult run_kconv(const RunConfig& cfg, const std::filesystem::path* out) {
  const MeshPair mesh = make_mesh(cfg.mesh);
  const Coefficient a = make_field(mesh, cfg.field);
  const FineFunction g = boundary_function(mesh);
  const int threads = resolve_threads(cfg.threads);
  std::optional<FineFunction> uh;
  if (cfg.reference != ReferenceMode::none)
    uh = solve_fine_reference(mesh, a, zero_source(), g);

  KconvResult res;
  std::unique_ptr<CsvWriter> csv;
  if (out)
    csv = std::make_unique<CsvWriter>(*out / "errors.csv",
                                      std::vector<std::string>{"k", "energy_err", "l2_coarse_err", "wall_ms"});
  for (int k : cfg.k_values) {
    const LodContext ctx(mesh, zero_source(), g, k, cfg.include_rhs_correction);
    AdaptiveSolver solver(ctx, {.always_recompute = true, .threads = threads});
    const StepResult step = solver.step(0, a);
    KconvRow row;
    row.k = k;
    row.wall_ms = step.wall_ms;
    row.err = {kNaN, kNaN};
    if (uh)
      row.err = solution_errors(mesh, a, *uh, g, solver.reconstruct(step.alpha), step.alpha);
    res.rows.push_back(row);
    if (out) {
      csv->row({static_cast<std::int64_t>(k), row.err.energy, row.err.l2_coarse, row.wall_ms});
      write_coarse_solution(*out / ("solution_k" + std::to_string(k) + ".csv"), mesh, step.alpha);
    }
  }
  if (csv)
    csv->close();
  if (uh && cfg.reference == ReferenceMode::coarse_fem) {
    const CoarseFunction uc = solve_coarse_fem(mesh, a, zero_source(), g);
    res.coarse_fem = solution_errors(mesh, a, *uh, g, prolongate(mesh, uc), uc);
    if (out) {
      CsvWriter w(*out / "coarse_fem.csv", {"energy_err", "l2_coarse_err"});
      w.row({res.coarse_fem->energy, res.coarse_fem->l2_coarse});
      w.close();
    }
  }
  return res;
}

std::vector<SweepRun> run_tol_sweep(const RunConfig& cfg, const std::filesystem::path* out) {
  const MeshPair mesh = make_mesh(cfg.mesh);
  const Coefficient base = checkerboard_base(mesh, cfg.field.seed);
  const FineFunction g = boundary_function(mesh);
  const int threads = resolve_threads(cfg.threads);
  const LodContext ctx(mesh, zero_source(), g, cfg.k, cfg.include_rhs_correction);
  const bool reference = cfg.reference != ReferenceMode::none;

  std::vector<SweepRun> runs;
  std::vector<std::unique_ptr<AdaptiveSolver>> solvers;
  for (double tol : cfg.tol_values) {
    runs.push_back({tol, false, {}});
    solvers.push_back(std::make_unique<AdaptiveSolver>(
        ctx, AdaptiveOptions{.tol = tol,
                             .mode = cfg.indicator_mode,
                             .keep_correctors = reference || cfg.full_recompute_run,
                             .squared_threshold = cfg.squared_threshold,
                             .lagging_boundary_load = cfg.boundary_load == "lagging",
                             .threads = threads}));
  }
  if (cfg.full_recompute_run) {
    runs.push_back({0.0, true, {}});
    solvers.push_back(std::make_unique<AdaptiveSolver>(
        ctx, AdaptiveOptions{.mode = cfg.indicator_mode, .always_recompute = true, .keep_correctors = true,
                             .threads = threads}));
  }
  const Coefficient a0 = sweep_coefficient(mesh, base, 0);
  for (size_t r = 0; r < runs.size(); ++r)
    if (!runs[r].full)
      solvers[r]->initialize(a0);

  struct Files {
    std::unique_ptr<CsvWriter> summary, mask, indicators;
  };
  std::vector<Files> files(runs.size());
  std::unique_ptr<CsvWriter> diff_csv;
  if (out) {
    for (size_t r = 0; r < runs.size(); ++r) {
      const std::string tag = runs[r].full ? "full" : "tol" + format_double(runs[r].tol);
      files[r].summary = std::make_unique<CsvWriter>(
          *out / ("summary_" + tag + ".csv"),
          std::vector<std::string>{"n", "TOL", "k", "recomputed_count", "recomputed_fraction", "energy_err",
                                   "l2_coarse_err", "wall_ms"});
      if (cfg.write_masks)
        files[r].mask = std::make_unique<CsvWriter>(*out / ("mask_" + tag + ".csv"),
                                                    std::vector<std::string>{"n", "element", "recomputed"});
      if (cfg.write_indicators && !runs[r].full)
        files[r].indicators = std::make_unique<CsvWriter>(
            *out / ("indicators_" + tag + ".csv"),
            std::vector<std::string>{"step", "element", "e_u", "e_f", "e_g", "recomputed"});
    }
    if (cfg.full_recompute_run)
      diff_csv = std::make_unique<CsvWriter>(*out / "full_recompute_diff.csv",
                                             std::vector<std::string>{"n", "TOL", "energy_diff"});
  }

  for (int n = 0; n < cfg.steps; ++n) {
    const Coefficient a = sweep_coefficient(mesh, base, n);
    std::optional<FineFunction> uh;
    if (reference)
      uh = solve_fine_reference(mesh, a, zero_source(), g);
    std::vector<StepResult> results;
    std::vector<FineFunction> recon(runs.size());
    for (size_t r = 0; r < runs.size(); ++r) {
      results.push_back(solvers[r]->step(n, a));
      if (reference || cfg.full_recompute_run)
        recon[r] = solvers[r]->reconstruct(results.back().alpha);
    }
    for (size_t r = 0; r < runs.size(); ++r) {
      const StepResult& res = results[r];
      SweepStep st;
      st.n = n;
      st.count = res.count;
      st.fraction = res.fraction;
      st.wall_ms = res.wall_ms;
      st.recomputed = res.recomputed;
      st.err = {kNaN, kNaN};
      st.full_diff = kNaN;
      if (uh)
        st.err = solution_errors(mesh, a, *uh, g, recon[r], res.alpha);
      if (cfg.full_recompute_run) {
        const FineFunction& full = recon.back();
        st.full_diff = norms(mesh, recon[r] - full, a).energy / norms(mesh, full + g, a).energy;
      }
      if (out) {
        const Files& f = files[r];
        f.summary->row({static_cast<std::int64_t>(n), runs[r].tol, static_cast<std::int64_t>(cfg.k),
                        static_cast<std::int64_t>(st.count), st.fraction, st.err.energy, st.err.l2_coarse,
                        st.wall_ms});
        for (size_t e = 0; e < res.recomputed.size(); ++e) {
          if (f.mask)
            f.mask->row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(e),
                         static_cast<std::int64_t>(res.recomputed[e])});
          if (f.indicators) {
            const ElementIndicators& ind = res.indicators[e];
            f.indicators->row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(e), ind.e_u, ind.e_f,
                               ind.e_g, static_cast<std::int64_t>(res.recomputed[e])});
          }
        }
        if (diff_csv && !runs[r].full)
          diff_csv->row({static_cast<std::int64_t>(n), runs[r].tol, st.full_diff});
      }
      runs[r].steps.push_back(std::move(st));
    }
  }
  for (Files& f : files) {
    for (auto* w : {f.summary.get(), f.mask.get(), f.indicators.get()})
      if (w)
        w->close();
  }
  if (diff_csv)
    diff_csv->close();
  return runs;
}

SingleResult run_single(const RunConfig& cfg, const std::filesystem::path* out) {
  const MeshPair mesh = make_mesh(cfg.mesh);
  const Coefficient a = make_field(mesh, cfg.field);
  const FineFunction g = boundary_function(mesh);
  const LodContext ctx(mesh, zero_source(), g, cfg.k, cfg.include_rhs_correction);
  AdaptiveSolver solver(ctx, {.always_recompute = true, .threads = resolve_threads(cfg.threads)});
  const StepResult step = solver.step(0, a);
  SingleResult res;
  res.alpha = step.alpha;
  if (cfg.reference != ReferenceMode::none) {
    const FineFunction uh = solve_fine_reference(mesh, a, zero_source(), g);
    res.err = solution_errors(mesh, a, uh, g, solver.reconstruct(step.alpha), step.alpha);
  }
  if (out) {
    write_coarse_solution(*out / "solution.csv", mesh, step.alpha);
    CsvWriter w(*out / "errors.csv", {"k", "energy_err", "l2_coarse_err", "wall_ms"});
    w.row({static_cast<std::int64_t>(cfg.k), res.err ? res.err->energy : kNaN, res.err ? res.err->l2_coarse : kNaN,
           step.wall_ms});
    w.close();
  }
  return res;
}

void run_experiment(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  std::filesystem::create_directories(out);
  {
    nlohmann::json meta;
    meta["config"] = to_json(cfg);
    meta["seed"] = cfg.field.seed;
    meta["resolved_threads"] = resolve_threads(cfg.threads);
    meta["versions"] = {{"lodadapt", "1.0.0"},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"compiler", __VERSION__}};
    std::ofstream f(out / "metadata.json");
    f << meta.dump(2) << '\n';
    if (!f)
      throw ConfigError("cannot write metadata.json in " + out.string());
  }
  switch (cfg.experiment) {
  case Experiment::kconv:
    run_kconv(cfg, &out);
    break;
  case Experiment::tol_sweep:
    run_tol_sweep(cfg, &out);
    break;
  case Experiment::single_solve:
    run_single(cfg, &out);
    break;
  case Experiment::darcy2d:
  case Experiment::darcy3d:
    run_darcy(cfg, &out);
    break;
  }
}

} // namespace lodadapt
