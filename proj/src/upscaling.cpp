#include "lodadapt/experiments.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/interp.hpp"
#include "lodadapt/io.hpp"
#include "lodadapt/pglod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>

namespace lodadapt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRangeSlack = 1e-12;

enum class PressureKind { fine_reference, coarse_fem, lod };

Eigen::VectorXd total_mobility(const Saturation& s) {
  Eigen::VectorXd lam(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    lam[i] = mobility(s[i]).total;
  return lam;
}

double saturation_l2(const MeshPair& mesh, const Saturation& a, const Saturation& b) {
  return std::sqrt(mesh.coarse_cell_volume() * (a - b).squaredNorm());
}

/// Largest relative gap between δ_T from the stored coarse mobilities and δ_T
/// evaluated cell by cell on the fine coefficients λ̃K and λK.
double delta_mismatch(const MeshPair& mesh, const Coefficient& permeability, const AdaptiveSolver& solver,
                      const Eigen::VectorXd& lam) {
  const IndexBox coarse = mesh.coarse_cell_box();
  double worst = 0.0;
  for (const ElementRecord& r : solver.records()) {
    for (size_t i = 0; i < r.mu.size(); ++i) {
      const int tp = r.mu[i].element;
      const double lagging = r.lagging_mobility[i], current = lam[tp];
      const double coarse_delta = mobility_delta(lagging, current);
      for_each_index(mesh.fine_cells_of(coarse.coords(tp)), [&](const IVec& c) {
        const double k = permeability.at(c);
        const double at = lagging * k, a = current * k;
        const double fine_delta = (at - a) / std::sqrt(at * a);
        worst = std::max(worst, std::abs(fine_delta - coarse_delta) / std::max(1.0, std::abs(fine_delta)));
      });
    }
  }
  return worst;
}

double boundary_balance(const FaceSet& faces, const FluxField& sigma, double source_total) {
  double net = 0.0, scale = 0.0;
  for (int i = 0; i < faces.size(); ++i) {
    const Face& f = faces[i];
    if (f.kind != FaceKind::dirichlet)
      continue;
    net += (f.lower < 0 ? -1.0 : 1.0) * sigma[i];
    scale += std::abs(sigma[i]);
  }
  return std::abs(net - source_total) / (scale > 0.0 ? scale : 1.0);
}

BoundarySaturation boundary_saturation(const DarcyConfig& d) {
  BoundarySaturation sb{};
  for (size_t a = 0; a < d.boundary_saturation.size() && a < sb.size(); ++a)
    sb[a] = d.boundary_saturation[a];
  return sb;
}

struct Spec {
  PressureKind kind;
  std::string name;
  int k = -1;
  double tol = 0.0;
};

} // namespace

double DarcyVariant::mean_fraction() const {
  double s = 0.0;
  for (const DarcyStepStats& st : steps)
    s += st.fraction;
  return steps.empty() ? 0.0 : s / steps.size();
}

const DarcyVariant* DarcyResult::find(const std::string& name) const {
  for (const DarcyVariant& v : variants)
    if (v.name == name)
      return &v;
  return nullptr;
}

std::string lod_variant_name(int k, double tol) { return "lod_k" + std::to_string(k) + "_tol" + format_double(tol); }

Saturation initial_saturation(const MeshPair& mesh, const std::string& kind) {
  Saturation s = Saturation::Zero(mesh.num_coarse_cells());
  if (kind == "zero")
    return s;
  if (kind != "sphere")
    throw ConfigError("unknown initial saturation '" + kind + "'");
  const IndexBox cells = mesh.coarse_cell_box();
  for_each_index(cells, [&](const IVec& c) {
    const DVec x = mesh.coarse_cell_midpoint(c);
    double r2 = 0.0;
    for (int a = 0; a < mesh.dim(); ++a) {
      const double mid = 0.5 * (mesh.lower()[a] + mesh.upper()[a]);
      r2 += (x[a] - mid) * (x[a] - mid);
    }
    if (r2 <= 0.0625)
      s[cells.linear(c)] = 1.0;
  });
  return s;
}

DarcyResult run_darcy(const RunConfig& cfg, const std::filesystem::path* out) {
  const MeshPair mesh = make_mesh(cfg.mesh);
  const FaceSet faces(mesh);
  const LocalMatrices local(mesh);
  const Coefficient permeability = make_field(mesh, cfg.field);
  const FineFunction g = boundary_function(mesh);
  const Source f = Source::zero();
  const Eigen::VectorXd sources = element_sources(mesh, local, f);
  const double source_total = sources.sum();
  const int threads = resolve_threads(cfg.threads);
  const DarcyConfig& dc = cfg.darcy;
  const BoundarySaturation sb = boundary_saturation(dc);
  const Saturation s0 = initial_saturation(mesh, dc.initial);
  const int ne = mesh.num_coarse_cells();

  std::vector<Spec> specs;
  if (cfg.reference != ReferenceMode::none)
    specs.push_back({PressureKind::fine_reference, "fine_reference"});
  if (cfg.reference == ReferenceMode::coarse_fem)
    specs.push_back({PressureKind::coarse_fem, "coarse_fem"});
  for (const LodRun& r : dc.runs)
    specs.push_back({PressureKind::lod, lod_variant_name(r.k, r.tol), r.k, r.tol});

  std::unique_ptr<CsvWriter> conservation_csv, delta_csv, violations_csv;
  if (out) {
    conservation_csv = std::make_unique<CsvWriter>(
        *out / "conservation.csv", std::vector<std::string>{"n", "variant", "max_residual", "balance", "mass_residual"});
    if (dc.delta_check)
      delta_csv = std::make_unique<CsvWriter>(*out / "delta_check.csv",
                                              std::vector<std::string>{"n", "variant", "max_mismatch"});
    violations_csv = std::make_unique<CsvWriter>(*out / "range_violations.csv",
                                                 std::vector<std::string>{"n", "variant", "element", "value"});
  }

  DarcyResult result;
  for (const Spec& spec : specs) {
    DarcyVariant var;
    var.name = spec.name;
    var.k = spec.k;
    var.tol = spec.tol;
    var.saturation.push_back(s0);

    std::unique_ptr<LodContext> ctx;
    std::unique_ptr<AdaptiveSolver> solver;
    if (spec.kind == PressureKind::lod) {
      ctx = std::make_unique<LodContext>(mesh, f, g, spec.k, cfg.include_rhs_correction);
      solver = std::make_unique<AdaptiveSolver>(*ctx, AdaptiveOptions{.tol = spec.tol,
                                                                      .mode = IndicatorMode::coarse,
                                                                      .flux_tables = true,
                                                                      .squared_threshold = cfg.squared_threshold,
                                                                      .lagging_boundary_load =
                                                                          cfg.boundary_load == "lagging",
                                                                      .threads = threads});
      const Eigen::VectorXd lam0 = total_mobility(s0);
      solver->initialize(darcy_coefficient(mesh, permeability, s0), &lam0, 0);
    }

    std::unique_ptr<CsvWriter> stats_csv, mask_csv;
    if (out) {
      stats_csv = std::make_unique<CsvWriter>(
          *out / ("stats_" + spec.name + ".csv"),
          std::vector<std::string>{"n", "TOL", "k", "recomputed_count", "recomputed_fraction", "energy_err",
                                   "l2_coarse_err", "wall_ms", "sat_min", "sat_max"});
      if (solver && cfg.write_masks)
        mask_csv = std::make_unique<CsvWriter>(*out / ("mask_" + spec.name + ".csv"),
                                               std::vector<std::string>{"n", "element", "recomputed"});
      write_field(*out / ("sat_" + spec.name + "_n0.field"), coarse_cell_field(mesh, s0));
    }

    FluxField sigma;
    for (int n = 1; n <= dc.steps; ++n) {
      const Saturation& prev = var.saturation.back();
      const Coefficient a = darcy_coefficient(mesh, permeability, prev);
      const Eigen::VectorXd lam = total_mobility(prev);
      DarcyStepStats st;
      st.n = n;
      st.sat_error = kNaN;
      st.delta_mismatch = kNaN;

      FluxField pre;
      if (spec.kind == PressureKind::lod) {
        if (dc.delta_check)
          st.delta_mismatch = delta_mismatch(mesh, permeability, *solver, lam);
        const StepResult step = solver->step(n, a, &lam);
        pre = solver->preflux(step.alpha, dc.g_flux == "true" ? &a : nullptr);
        st.count = step.count;
        st.fraction = step.fraction;
        st.wall_ms = step.wall_ms;
        if (mask_csv)
          for (int e = 0; e < ne; ++e)
            mask_csv->row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(e),
                           static_cast<std::int64_t>(step.recomputed[e])});
      } else {
        const auto start = std::chrono::steady_clock::now();
        FineFunction w;
        if (spec.kind == PressureKind::fine_reference)
          w = solve_fine_reference(mesh, a, f, g) + g;
        else
          w = prolongate(mesh, solve_coarse_fem(mesh, a, f, g)) + g;
        pre = fine_preflux(mesh, faces, a, w);
        st.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }

      sigma = conservative_flux(mesh, faces, pre, sources);
      const Eigen::VectorXd residual = conservation_residual(mesh, faces, sigma, sources);
      const double mean_flux = sigma.size() ? sigma.cwiseAbs().mean() : 0.0;
      st.conservation = residual.cwiseAbs().maxCoeff() / (mean_flux > 0.0 ? mean_flux : 1.0);
      st.balance = boundary_balance(faces, sigma, source_total);

      TransportResult tr = transport_step(mesh, faces, prev, sigma, dc.dt, sb);
      st.mass = std::abs(tr.mass_change - tr.boundary_flux) / (tr.scale > 0.0 ? tr.scale : 1.0);
      for (int e = 0; e < ne; ++e) {
        const double v = tr.s[e];
        if (v < -kRangeSlack || v > 1.0 + kRangeSlack) {
          if (var.range_violations++ == 0)
            std::cerr << "lodadapt: " << spec.name << " step " << n << " element " << e << " saturation "
                      << format_double(v) << " outside [0, 1]\n";
          if (violations_csv)
            violations_csv->row({static_cast<std::int64_t>(n), spec.name, static_cast<std::int64_t>(e), v});
        }
      }
      if (dc.clamp_saturation)
        tr.s = tr.s.cwiseMax(0.0).cwiseMin(1.0);
      st.sat_min = tr.s.minCoeff();
      st.sat_max = tr.s.maxCoeff();
      if (const DarcyVariant* ref = result.find("fine_reference"))
        st.sat_error = saturation_l2(mesh, tr.s, ref->saturation[n]);
      var.saturation.push_back(std::move(tr.s));

      if (out) {
        stats_csv->row({static_cast<std::int64_t>(n), spec.tol, static_cast<std::int64_t>(spec.k),
                        static_cast<std::int64_t>(st.count), st.fraction, kNaN, kNaN, st.wall_ms, st.sat_min,
                        st.sat_max});
        conservation_csv->row({static_cast<std::int64_t>(n), spec.name, st.conservation, st.balance, st.mass});
        if (delta_csv && spec.kind == PressureKind::lod)
          delta_csv->row({static_cast<std::int64_t>(n), spec.name, st.delta_mismatch});
        if ((dc.dump_every > 0 && n % dc.dump_every == 0) || n == dc.steps)
          write_field(*out / ("sat_" + spec.name + "_n" + std::to_string(n) + ".field"),
                      coarse_cell_field(mesh, var.saturation.back()));
      }
      var.steps.push_back(st);
    }
    if (var.range_violations > 1)
      std::cerr << "lodadapt: " << spec.name << ": " << var.range_violations << " saturations outside [0, 1] in total\n";
    if (out) {
      stats_csv->close();
      if (mask_csv)
        mask_csv->close();
      if (sigma.size())
        write_flux(*out / ("flux_" + spec.name + "_final.csv"), mesh, faces, sigma);
    }
    result.variants.push_back(std::move(var));
  }

  if (out) {
    conservation_csv->close();
    if (delta_csv)
      delta_csv->close();
    violations_csv->close();
    if (result.find("fine_reference")) {
      CsvWriter w(*out / "saturation_errors.csv", {"n", "variant", "l2_err"});
      for (const DarcyVariant& v : result.variants) {
        if (v.name == "fine_reference")
          continue;
        for (const DarcyStepStats& st : v.steps)
          w.row({static_cast<std::int64_t>(st.n), v.name, st.sat_error});
      }
      w.close();
    }
  }
  return result;
}

} // namespace lodadapt
