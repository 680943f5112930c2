#include "lodadapt/adaptive.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace lodadapt {

double ElementIndicators::max() const { return std::max({e_u, e_f, e_g}); }

AdaptiveSolver::AdaptiveSolver(const LodContext& ctx, AdaptiveOptions options)
    : ctx_(&ctx), options_(options), records_(ctx.mesh().num_coarse_cells()) {
  if (!(options_.tol >= 0.0))
    throw ConfigError("TOL must be >= 0");
  options_.threads = std::max(1, options_.threads);
}

void AdaptiveSolver::recompute(int element, int n, const Coefficient& a, const Eigen::VectorXd* mobility) {
  CorrectorSet cs = compute_element_correctors(*ctx_, element, a);
  ElementRecord r;
  r.age = n;
  r.contribution = element_contribution(*ctx_, cs);
  if (options_.lagging_boundary_load)
    boundary_load_contribution(*ctx_, cs, r.contribution);
  if (options_.flux_tables)
    r.flux = flux_table(*ctx_, cs, a);
  if (options_.mode == IndicatorMode::coarse) {
    r.mu = mu_table(*ctx_, cs);
    if (mobility) {
      r.lagging_mobility.reserve(r.mu.size());
      for (const MuRow& row : r.mu)
        r.lagging_mobility.push_back((*mobility)[row.element]);
    } else {
      r.snapshot = cs.snapshot;
    }
  }
  if (options_.mode == IndicatorMode::fine || options_.keep_correctors)
    r.correctors = std::move(cs);
  records_[element] = std::move(r);
}

void AdaptiveSolver::initialize(const Coefficient& a, const Eigen::VectorXd* mobility, int n) {
  const int ne = ctx_->mesh().num_coarse_cells();
  if (mobility && mobility->size() != ne)
    throw ConfigError("mobility field has the wrong size");
  mobility_mode_ = mobility != nullptr;
  parallel_for(ne, options_.threads, [&](int e) { recompute(e, n, a, mobility); });
  initialized_ = true;
}

ElementIndicators AdaptiveSolver::evaluate(int element, const Coefficient& a, const Eigen::VectorXd* mobility) const {
  const ElementRecord& r = records_[element];
  ElementIndicators out;
  if (options_.mode == IndicatorMode::fine) {
    if (!r.correctors)
      throw StateError("correctors of element " + std::to_string(element) + " are not stored");
    const FineIndicators fi = fine_indicators(*ctx_, *r.correctors, a);
    out.e_u = fi.e_u;
    out.e_f = fi.e_f;
    out.e_g = fi.e_g;
    return out;
  }
  const MeshPair& mesh = ctx_->mesh();
  const IndexBox coarse = mesh.coarse_cell_box();
  std::vector<double> delta2(r.mu.size());
  double rho = 0.0;
  for (size_t i = 0; i < r.mu.size(); ++i) {
    const int tp = r.mu[i].element;
    if (mobility_mode_) {
      const double d = mobility_delta(r.lagging_mobility[i], (*mobility)[tp]);
      delta2[i] = d * d;
      if (tp == element)
        rho = r.lagging_mobility[i] / (*mobility)[tp];
    } else {
      delta2[i] = delta_squared(r.snapshot, a, mesh.fine_cells_of(coarse.coords(tp)));
    }
  }
  if (!mobility_mode_)
    rho = ratio_sup(r.snapshot, a, mesh.fine_cells_of(coarse.coords(element)));
  const CoarseIndicators ci = coarse_indicators(r.mu, delta2, rho);
  out.e_u = std::sqrt(ci.e_u);
  out.e_f = std::sqrt(ci.e_f);
  out.e_g = std::sqrt(ci.e_g);
  return out;
}

std::vector<ElementIndicators> AdaptiveSolver::indicators(const Coefficient& a, const Eigen::VectorXd* mobility) const {
  if (!initialized_)
    throw StateError("adaptive solver is not initialized");
  const int ne = ctx_->mesh().num_coarse_cells();
  if (mobility_mode_ != (mobility != nullptr))
    throw StateError(mobility_mode_ ? "mobility field required" : "store was not built with a mobility field");
  if (mobility && mobility->size() != ne)
    throw ConfigError("mobility field has the wrong size");
  std::vector<ElementIndicators> out(ne);
  parallel_for(ne, options_.threads, [&](int e) { out[e] = evaluate(e, a, mobility); });
  return out;
}

StepResult AdaptiveSolver::step(int n, const Coefficient& a, const Eigen::VectorXd* mobility) {
  const auto start = std::chrono::steady_clock::now();
  const int ne = ctx_->mesh().num_coarse_cells();
  StepResult res;
  res.n = n;
  res.recomputed.assign(ne, 0);
  if (options_.always_recompute) {
    if (!initialized_)
      mobility_mode_ = mobility != nullptr;
    res.indicators.assign(ne, ElementIndicators{});
    res.recomputed.assign(ne, 1);
  } else {
    res.indicators = indicators(a, mobility);
    const bool squared = options_.squared_threshold && options_.mode == IndicatorMode::coarse;
    for (int e = 0; e < ne; ++e) {
      const double v = res.indicators[e].max();
      res.recomputed[e] = (squared ? v * v : v) >= options_.tol;
    }
  }
  std::vector<int> todo;
  for (int e = 0; e < ne; ++e)
    if (res.recomputed[e])
      todo.push_back(e);
  parallel_for(static_cast<int>(todo.size()), options_.threads,
               [&](int i) { recompute(todo[i], n, a, mobility); });
  initialized_ = true;
  res.count = static_cast<int>(todo.size());
  res.fraction = static_cast<double>(res.count) / ne;

  std::vector<const ElementContribution*> blocks(ne);
  for (int e = 0; e < ne; ++e)
    blocks[e] = &records_[e].contribution;
  const Eigen::VectorXd load = options_.lagging_boundary_load ? source_load(*ctx_) : true_load(*ctx_, a);
  res.alpha = solve_coarse(assemble_global(*ctx_, blocks, load));
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

FineFunction AdaptiveSolver::reconstruct(const CoarseFunction& alpha) const {
  std::vector<const CorrectorSet*> cs(records_.size());
  for (size_t e = 0; e < records_.size(); ++e)
    cs[e] = records_[e].correctors ? &*records_[e].correctors : nullptr;
  return lodadapt::reconstruct(*ctx_, alpha, cs);
}

FluxField AdaptiveSolver::preflux(const CoarseFunction& alpha, const Coefficient* a) const {
  std::vector<const FluxTable*> t(records_.size());
  for (size_t e = 0; e < records_.size(); ++e)
    t[e] = records_[e].flux ? &*records_[e].flux : nullptr;
  return lodadapt::preflux(*ctx_, alpha, t, a);
}

std::uint64_t coefficient_hash(const Coefficient& a) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : a.values()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'l', 'o', 'd', 'a', 'c', 'k', 'p', '1'};

class Writer {
public:
  explicit Writer(const std::filesystem::path& p) : out_(p, std::ios::binary) {
    if (!out_)
      throw ConfigError("cannot write " + p.string());
  }
  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  void mat(const Eigen::MatrixXd& m) {
    pod<std::int64_t>(m.rows());
    pod<std::int64_t>(m.cols());
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  void box(const IndexBox& b) {
    pod(b.lo);
    pod(b.hi);
  }
  void coefficient(const Coefficient& a) {
    box(a.box());
    vec(a.values());
    pod(coefficient_hash(a));
  }
  void finish() {
    out_.flush();
    if (!out_)
      throw ConfigError("write failed");
  }

private:
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& p) : in_(p, std::ios::binary), path_(p.string()) {
    if (!in_)
      throw StateError("cannot read " + path_);
  }
  template <class T>
  T pod() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  template <class T>
  std::vector<T> vec() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ull << 34))
      throw StateError("corrupt checkpoint " + path_);
    std::vector<T> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    check();
    return v;
  }
  Eigen::MatrixXd mat() {
    const auto r = pod<std::int64_t>();
    const auto c = pod<std::int64_t>();
    if (r < 0 || c < 0 || r * c > (1ll << 34))
      throw StateError("corrupt checkpoint " + path_);
    Eigen::MatrixXd m(r, c);
    in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    check();
    return m;
  }
  IndexBox box() {
    IndexBox b;
    b.lo = pod<IVec>();
    b.hi = pod<IVec>();
    return b;
  }
  Coefficient coefficient() {
    const IndexBox b = box();
    std::vector<double> v = vec<double>();
    const auto h = pod<std::uint64_t>();
    Coefficient a = v.empty() ? Coefficient() : Coefficient(b, std::move(v));
    if (coefficient_hash(a) != h)
      throw StateError("coefficient snapshot hash mismatch in " + path_);
    return a;
  }

private:
  void check() {
    if (!in_)
      throw StateError("truncated checkpoint " + path_);
  }
  std::ifstream in_;
  std::string path_;
};

std::filesystem::path record_path(const std::filesystem::path& dir, int e) {
  return dir / ("element_" + std::to_string(e) + ".bin");
}

} // namespace

void AdaptiveSolver::save(const std::filesystem::path& dir) const {
  if (!initialized_)
    throw StateError("nothing to save: adaptive solver is not initialized");
  std::filesystem::create_directories(dir);
  {
    Writer w(dir / "manifest.bin");
    w.pod(kMagic);
    w.pod<std::int32_t>(static_cast<std::int32_t>(records_.size()));
    w.pod<std::int32_t>(ctx_->layers());
    w.pod<std::int32_t>(static_cast<std::int32_t>(options_.mode));
    w.pod<std::uint8_t>(mobility_mode_);
    w.finish();
  }
  for (size_t e = 0; e < records_.size(); ++e) {
    const ElementRecord& r = records_[e];
    Writer w(record_path(dir, static_cast<int>(e)));
    w.pod<std::int32_t>(r.age);
    const ElementContribution& c = r.contribution;
    w.vec(c.rows);
    w.pod(c.cols);
    w.mat(c.stiffness);
    w.mat(c.load);
    w.pod<std::uint64_t>(r.mu.size());
    for (const MuRow& m : r.mu)
      w.pod(m);
    w.coefficient(r.snapshot);
    w.vec(r.lagging_mobility);
    w.pod<std::uint8_t>(r.flux.has_value());
    if (r.flux) {
      w.vec(r.flux->faces);
      w.mat(r.flux->values);
    }
    w.pod<std::uint8_t>(r.correctors.has_value());
    if (r.correctors) {
      w.mat(r.correctors->corr);
      w.coefficient(r.correctors->snapshot);
    }
    w.finish();
  }
}

void AdaptiveSolver::load(const std::filesystem::path& dir) {
  bool mobility = false;
  {
    Reader rd(dir / "manifest.bin");
    const auto magic = rd.pod<std::array<char, 8>>();
    if (std::memcmp(magic.data(), kMagic, 8) != 0)
      throw StateError("not a checkpoint directory: " + dir.string());
    const auto n = rd.pod<std::int32_t>();
    const auto layers = rd.pod<std::int32_t>();
    const auto mode = rd.pod<std::int32_t>();
    mobility = rd.pod<std::uint8_t>() != 0;
    if (n != static_cast<int>(records_.size()) || layers != ctx_->layers() ||
        mode != static_cast<std::int32_t>(options_.mode))
      throw StateError("checkpoint does not match the current configuration");
  }
  std::vector<ElementRecord> loaded(records_.size());
  for (size_t e = 0; e < loaded.size(); ++e) {
    Reader rd(record_path(dir, static_cast<int>(e)));
    ElementRecord& r = loaded[e];
    r.age = rd.pod<std::int32_t>();
    r.contribution.element = static_cast<int>(e);
    r.contribution.rows = rd.vec<int>();
    r.contribution.cols = rd.pod<std::array<int, 8>>();
    r.contribution.stiffness = rd.mat();
    r.contribution.load = rd.mat();
    const auto nmu = rd.pod<std::uint64_t>();
    r.mu.resize(nmu);
    for (MuRow& m : r.mu)
      m = rd.pod<MuRow>();
    r.snapshot = rd.coefficient();
    r.lagging_mobility = rd.vec<double>();
    if (rd.pod<std::uint8_t>()) {
      FluxTable t;
      t.element = static_cast<int>(e);
      t.faces = rd.vec<int>();
      t.values = rd.mat();
      r.flux = std::move(t);
    }
    if (rd.pod<std::uint8_t>()) {
      // Patch geometry and the center basis values are functions of the
      // context; only the solved columns and Ã_T are stored.
      CorrectorSet cs = corrector_frame(*ctx_, static_cast<int>(e));
      cs.corr = rd.mat();
      cs.snapshot = rd.coefficient();
      r.correctors = std::move(cs);
    }
  }
  records_ = std::move(loaded);
  mobility_mode_ = mobility;
  initialized_ = true;
}

} // namespace lodadapt
