#include "lodadapt/field.hpp"

#include "lodadapt/error.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace lodadapt {

double FieldRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0)
    u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

namespace {

void require_dim(const MeshPair& mesh, int dim, const char* what) {
  if (mesh.dim() != dim)
    throw ConfigError(std::string(what) + " needs a " + std::to_string(dim) + "D mesh");
}

template <class Fn>
Coefficient cellwise(const MeshPair& mesh, Fn&& fn) {
  const IndexBox cells = mesh.fine_cell_box();
  std::vector<double> v(cells.size());
  for_each_index(cells, [&](const IVec& c) { v[cells.linear(c)] = fn(c, mesh.fine_cell_midpoint(c)); });
  return Coefficient(cells, std::move(v));
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

ComplexBuffer complex_buffer(size_t n) {
  return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

void fft2(fftw_complex* data, int n0, int n1) {
  // Planning is not thread safe in FFTW; callers never plan concurrently.
  fftw_plan plan = fftw_plan_dft_2d(n1, n0, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

// Eigenvalues of the circulant embedding on an m0 x m1 torus with spacing h,
// or an empty vector if any is negative beyond round-off.
std::vector<double> circulant_spectrum(int m0, int m1, const DVec& h, double corr_len) {
  const size_t n = static_cast<size_t>(m0) * m1;
  ComplexBuffer row = complex_buffer(n);
  for (int j = 0; j < m1; ++j)
    for (int i = 0; i < m0; ++i) {
      const double dx = std::min(i, m0 - i) * h[0];
      const double dy = std::min(j, m1 - j) * h[1];
      row[i + static_cast<size_t>(m0) * j][0] = std::exp(-std::hypot(dx, dy) / corr_len);
      row[i + static_cast<size_t>(m0) * j][1] = 0.0;
    }
  fft2(row.get(), m0, m1);
  std::vector<double> lambda(n);
  double lmax = 0.0;
  for (size_t k = 0; k < n; ++k) {
    lambda[k] = row[k][0];
    lmax = std::max(lmax, lambda[k]);
  }
  for (double& l : lambda) {
    if (l < -1e-10 * lmax)
      return {};
    l = std::max(l, 0.0);
  }
  return lambda;
}

std::vector<double> sample_circulant(const MeshPair& mesh, double corr_len, FieldRng& rng) {
  const int n0 = mesh.fine_cells()[0], n1 = mesh.fine_cells()[1];
  const DVec& h = mesh.fine_size();
  for (int pad = 2; pad <= 8; pad *= 2) {
    const int m0 = pad * n0, m1 = pad * n1;
    const std::vector<double> lambda = circulant_spectrum(m0, m1, h, corr_len);
    if (lambda.empty())
      continue;
    const size_t n = lambda.size();
    ComplexBuffer w = complex_buffer(n);
    for (size_t k = 0; k < n; ++k) {
      const double s = std::sqrt(lambda[k] / static_cast<double>(n));
      w[k][0] = s * rng.normal();
      w[k][1] = s * rng.normal();
    }
    fft2(w.get(), m0, m1);
    std::vector<double> out(static_cast<size_t>(n0) * n1);
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i)
        out[i + static_cast<size_t>(n0) * j] = w[i + static_cast<size_t>(m0) * j][0];
    return out;
  }
  return {};
}

std::vector<double> sample_dense(const MeshPair& mesh, double corr_len, FieldRng& rng) {
  const IndexBox cells = mesh.fine_cell_box();
  const int n = cells.size();
  Eigen::MatrixXd cov(n, n);
  for (int a = 0; a < n; ++a) {
    const DVec p = mesh.fine_cell_midpoint(cells.coords(a));
    for (int b = 0; b <= a; ++b) {
      const DVec q = mesh.fine_cell_midpoint(cells.coords(b));
      cov(a, b) = cov(b, a) = std::exp(-std::hypot(p[0] - q[0], p[1] - q[1]) / corr_len);
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw SolverError("dense covariance factorization failed");
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i)
    z[i] = rng.normal();
  const Eigen::VectorXd x = llt.matrixL() * z;
  return std::vector<double>(x.data(), x.data() + n);
}

constexpr int kDenseLimit = 4096;

} // namespace

Coefficient checkerboard_base(const MeshPair& mesh, std::uint64_t seed) {
  require_dim(mesh, 2, "checkerboard coefficient");
  FieldRng rng(seed);
  const IndexBox cells = mesh.fine_cell_box();
  std::vector<double> v(cells.size());
  for (double& x : v)
    x = std::pow(10.0, -2.0 + 2.0 * rng.uniform());
  for_each_index(cells, [&](const IVec& c) {
    const DVec m = mesh.fine_cell_midpoint(c);
    if (m[0] >= 15.0 / 32.0 && m[0] <= 0.5)
      v[cells.linear(c)] = 1e-2;
  });
  for_each_index(cells, [&](const IVec& c) {
    const DVec m = mesh.fine_cell_midpoint(c);
    if (m[1] >= 0.25 && m[1] <= 5.0 / 16.0)
      v[cells.linear(c)] = 1.0;
  });
  return Coefficient(cells, std::move(v));
}

Coefficient sweep_coefficient(const MeshPair& mesh, const Coefficient& base, int n) {
  return cellwise(mesh, [&](const IVec& c, const DVec& x) {
    return base.at(c) * (2.0 + std::sin(8.0 * std::numbers::pi * (x[0] - n / 128.0)));
  });
}

Coefficient lognormal_field(const MeshPair& mesh, double stddev, double corr_len, std::uint64_t seed,
                            GaussianMethod method) {
  require_dim(mesh, 2, "lognormal field");
  if (!(stddev >= 0.0) || !(corr_len > 0.0))
    throw ConfigError("lognormal field needs stddev >= 0 and corr_len > 0");
  FieldRng rng(seed);
  std::vector<double> kappa;
  if (method != GaussianMethod::dense)
    kappa = sample_circulant(mesh, corr_len, rng);
  if (kappa.empty()) {
    if (method == GaussianMethod::circulant || mesh.num_fine_cells() > kDenseLimit)
      throw SolverError("circulant embedding of the covariance is not nonnegative; grid too large for the "
                        "dense fallback");
    kappa = sample_dense(mesh, corr_len, rng);
  }
  for (double& k : kappa)
    k = std::exp(stddev * k);
  return Coefficient(mesh.fine_cell_box(), std::move(kappa));
}

int product_octaves(const MeshPair& mesh) {
  const int n = *std::min_element(mesh.fine_cells().begin(), mesh.fine_cells().begin() + mesh.dim());
  int i = 0;
  while (i < 7 && (2 << i) <= n)
    ++i;
  return i;
}

Coefficient product_field_3d(const MeshPair& mesh, std::uint64_t seed) {
  require_dim(mesh, 3, "product field");
  const int octaves = product_octaves(mesh);
  FieldRng rng(seed);
  std::vector<std::vector<double>> omega(octaves + 1);
  for (int i = 1; i <= octaves; ++i) {
    const size_t side = size_t{1} << i;
    omega[i].resize(side * side * side);
    for (double& w : omega[i])
      w = rng.uniform();
  }
  const double scale = std::ldexp(1.0, -3 * octaves);
  const DVec& lo = mesh.lower();
  const DVec& hi = mesh.upper();
  return cellwise(mesh, [&](const IVec&, const DVec& x) {
    double k = scale;
    for (int i = 1; i <= octaves; ++i) {
      const int side = 1 << i;
      size_t idx = 0;
      for (int a = 2; a >= 0; --a) {
        // ⌈2^i x⌉ in 1..2^i on the unit cube, stored zero based
        const double t = (x[a] - lo[a]) / (hi[a] - lo[a]);
        const int q = std::clamp(static_cast<int>(std::ceil(side * t)), 1, side) - 1;
        idx = idx * side + q;
      }
      const double f = 1.0 + omega[i][idx];
      k *= f * f * f;
    }
    return k;
  });
}

} // namespace lodadapt
