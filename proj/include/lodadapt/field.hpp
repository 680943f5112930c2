#pragma once

/** @file field.hpp
    @brief Seeded coefficient generators: the random checkerboard with stripes,
    its sweep perturbations, lognormal Gaussian fields and the 3D octave
    product field.
*/

#include "lodadapt/fem.hpp"
#include "lodadapt/grid.hpp"

#include <cstdint>
#include <random>

namespace lodadapt {

/// mt19937_64 with platform-independent conversions (the std distributions
/// are implementation-defined).
class FieldRng {
public:
  explicit FieldRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Standard normal (Box-Muller, both outputs used).
  double normal();

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 10^c with c ~ U[−2, 0] per fine cell, then a = 10^-2 on cells with midpoint
/// x1 in [15/32, 1/2] and a = 1 on cells with midpoint x2 in [1/4, 5/16].
Coefficient checkerboard_base(const MeshPair& mesh, std::uint64_t seed);

/// A_b(x) (2 + sin(8π(x1 − n/128))) at fine cell midpoints.
Coefficient sweep_coefficient(const MeshPair& mesh, const Coefficient& base, int n);

enum class GaussianMethod { automatic, circulant, dense };

/// exp(stddev κ) at fine cell midpoints of a 2D mesh, κ centered Gaussian with
/// cov(κ(x), κ(y)) = exp(−|x − y| / corr_len). Throws SolverError if neither
/// sampler can represent the covariance.
Coefficient lognormal_field(const MeshPair& mesh, double stddev, double corr_len, std::uint64_t seed,
                            GaussianMethod method = GaussianMethod::automatic);

/// 2^{−3 i_max} Π_{i=1}^{i_max} (1 + ω_{i,⌈2^i x1⌉,⌈2^i x2⌉,⌈2^i x3⌉})³ with ω ~ U[0, 1]
/// and i_max = min(7, log2 of the smallest fine cell count).
Coefficient product_field_3d(const MeshPair& mesh, std::uint64_t seed);

/// Octave count used by product_field_3d for this mesh.
int product_octaves(const MeshPair& mesh);

} // namespace lodadapt
