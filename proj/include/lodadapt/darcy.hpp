#pragma once

/** @file darcy.hpp
    @brief Two-phase flow building blocks: mobilities, coarse face flux tables
    from correctors, pre-fluxes, conservative post-processing and explicit
    upwind transport of a piecewise constant coarse saturation.

    Face fluxes are integrated over the coarse face and signed along the face
    normal +e_axis (see Face).
*/

#include "lodadapt/corrector.hpp"
#include "lodadapt/fem.hpp"
#include "lodadapt/grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace lodadapt {

using Saturation = Eigen::VectorXd; ///< one value per coarse element
using FluxField = Eigen::VectorXd;  ///< one value per coarse face

struct Mobility {
  double wetting = 0.0;     ///< λ_w = s³
  double nonwetting = 0.0;  ///< λ_n = (1 − s)³
  double total = 0.0;       ///< λ
  double fractional = 0.0;  ///< ψ = λ_w / λ
};

/// Mobilities at s clamped to [0, 1].
Mobility mobility(double s);

/// λ(s_T) K on the fine cells of every coarse element T.
Coefficient darcy_coefficient(const MeshPair& mesh, const Coefficient& permeability, const Saturation& s);

/// Harmonic face average of two one-sided values.
inline double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

/// Face flux contributions of one element's corrected functions, summed over
/// the coarse cells T' of its patch: row r holds, for face faces[r],
/// −∫_F n_F·⟨Ã⟩∇F_i|_{T'} for the corners i < m, at column m the same for
/// R̃f − Q̃g and at column m + 1 for χ_T g.
struct FluxTable {
  int element = 0;
  std::vector<int> faces;
  Eigen::MatrixXd values; ///< faces x (m + 2)
};

/// Builds the table from fresh correctors. `a` is the coefficient the
/// correctors were computed with; cells across the patch boundary take their
/// value for the harmonic average from it as well.
FluxTable flux_table(const LodContext& ctx, const CorrectorSet& cs, const Coefficient& a);

/// σ̄_F = ½ Σ_T (Σ_i α_{T,i} tab_T(F, i) + tab_T(F, m) + tab_T(F, m + 1)). With
/// `a` given, the χ_T g column is replaced by the flux of g under `a`, which
/// keeps the boundary term on the same coefficient as the right side of the
/// coarse system. A null table throws StateError.
FluxField preflux(const LodContext& ctx, const CoarseFunction& alpha, const std::vector<const FluxTable*>& tables,
                  const Coefficient* a = nullptr);

/// Same averaging for a global fine function w (pressure plus boundary
/// extension): ½ Σ over the coarse cells adjacent to F of −∫_F n_F·⟨a⟩∇w|_T.
FluxField fine_preflux(const MeshPair& mesh, const FaceSet& faces, const Coefficient& a, const FineFunction& w);

/// ∫_T f for every coarse element.
Eigen::VectorXd element_sources(const MeshPair& mesh, const LocalMatrices& lm, const Source& f);

/// Minimizes Σ_F (σ_F − σ̄_F)² subject to Σ_{F⊂∂T} θ_{T,F} σ_F = ∫_T f for every
/// element, with σ = 0 on Neumann faces. Throws ConfigError if the constraints
/// are infeasible (no Dirichlet face and Σ ∫_T f ≠ 0).
FluxField conservative_flux(const MeshPair& mesh, const FaceSet& faces, const FluxField& preflux,
                            const Eigen::VectorXd& sources);

/// Σ_{F⊂∂T} θ_{T,F} σ_F − ∫_T f per element.
Eigen::VectorXd conservation_residual(const MeshPair& mesh, const FaceSet& faces, const FluxField& sigma,
                                      const Eigen::VectorXd& sources);

/// Boundary saturation per box side, [axis][side]; used on inflow faces.
using BoundarySaturation = std::array<std::array<double, 2>, kMaxDim>;

struct TransportResult {
  Saturation s;
  double mass_change = 0.0;   ///< Σ_T |T|(sⁿ_T − s^{n−1}_T)
  double boundary_flux = 0.0; ///< −Δt(Σ_out ψ(s)σ − Σ_in ψ(s_B)|σ|)
  double scale = 0.0;         ///< Δt Σ_F |ψσ| over all faces, for relative checks
  double min = 0.0;
  double max = 0.0;
};

/// sⁿ_T = s^{n−1}_T − Δt/|T| Σ_{F⊂∂T} ψ(s_up) θ_{T,F} σ_F with the lower
/// element upwind for σ ≥ 0 on interior faces, the own value on boundary
/// outflow and s_B on boundary inflow. Values are not clamped.
TransportResult transport_step(const MeshPair& mesh, const FaceSet& faces, const Saturation& s,
                               const FluxField& sigma, double dt, const BoundarySaturation& s_boundary);

} // namespace lodadapt
