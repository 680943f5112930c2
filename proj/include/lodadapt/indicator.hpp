#pragma once

/** @file indicator.hpp
    @brief Error indicators for lagging correctors: the fine indicators
    e_{u,T}, e_{f,T}, e_{g,T} and the coarse bounds E_{u,T}, E_{f,T}, E_{g,T}
    built from per-element μ̃ tables.
*/

#include "lodadapt/corrector.hpp"
#include "lodadapt/fem.hpp"

#include <Eigen/Dense>

#include <vector>

namespace lodadapt {

struct Eigenpair {
  double value = 0.0;
  Eigen::VectorXd vector; ///< length m, zero at the dropped index, xᵀCx = 1
};

/// Largest eigenvalue of B x = μ C x on the m − 1 basis functions left after
/// dropping index `drop`. Throws SolverError if the reduced C is not SPD.
Eigenpair max_generalized_eigenpair(const Eigen::MatrixXd& b, const Eigen::MatrixXd& c, int drop = 0);

struct FineIndicators {
  double e_u = 0.0;
  double e_f = 0.0;
  double e_g = 0.0;
  Eigenpair top; ///< maximizer of the e_u Rayleigh quotient (eigenvalue e_u²)
  double max() const;
};

/// Fine indicators of the stored correctors against the true coefficient `a`
/// (global fine field).
FineIndicators fine_indicators(const LodContext& ctx, const CorrectorSet& cs, const Coefficient& a,
                               int drop = 0);

/// Per (T, T') data kept after the correctors are discarded.
struct MuRow {
  int element = 0;      ///< T'
  double mu = 0.0;      ///< μ̃_{T,T'}
  double f_ratio = 0.0; ///< ‖Ã^{1/2}∇R̃f‖²_{T'} / ‖f‖²_{L2(T)}
  double g_ratio = 0.0; ///< ‖Ã^{1/2}(χ_T∇g − ∇Q̃g)‖²_{T'} / |g|²_{Ã,T}
};

using MuTable = std::vector<MuRow>;

MuTable mu_table(const LodContext& ctx, const CorrectorSet& cs);

/// Squared coarse bounds E_{u,T}, E_{f,T}, E_{g,T}.
struct CoarseIndicators {
  double e_u = 0.0;
  double e_f = 0.0;
  double e_g = 0.0;
};

/// delta2[r] = ‖δ_T‖²_{L∞(T'_r)} for the rows of `table`; rho = ‖A^{-1/2}Ã^{1/2}‖²_{L∞(T)}.
CoarseIndicators coarse_indicators(const MuTable& table, const std::vector<double>& delta2, double rho);

/// max over the fine cells of ((Ã − A)/√(ÃA))².
double delta_squared(const Coefficient& lagging, const Coefficient& a, const IndexBox& cells);
/// max over the fine cells of Ã/A.
double ratio_sup(const Coefficient& lagging, const Coefficient& a, const IndexBox& cells);
/// (λ̃ − λ)/√(λ̃λ): δ_T when the coefficients differ by a coarse mobility factor.
double mobility_delta(double lagging, double current);

} // namespace lodadapt
