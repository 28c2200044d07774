#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpkmeans/common.hpp"
#include "dpkmeans/sensitivity.hpp"
#include "dpkmeans/spd.hpp"

namespace dpkmeans {

/// gamma_c = epsilon^2 / (2 ln(2/delta)), natural log.
double gamma_c(double epsilon, double delta);

/// White-noise scale (delta_c / epsilon) * sqrt(2 ln(2/delta)).
double white_sigma(double delta_c, double epsilon, double delta);

struct PrivacyParams {
  double epsilon = 0.0;
  double delta = 0.0;
  double gamma_c = 0.0;

  static PrivacyParams Create(double epsilon, double delta);
};

enum class DesignMethod { kClosedForm, kDualAscent, kWhite };

std::string to_string(DesignMethod method);

/// The optimized precision matrix and everything needed to audit it.
struct PrecisionDesign {
  SymMatrix gamma;       // Kd x Kd precision, SPD
  SymMatrix covariance;  // gamma^{-1}
  Vector multipliers;    // per difference column, zero off the support
  std::optional<ActiveSet> active;
  double distortion = 0.0;  // tr(gamma^{-1})
  DesignMethod method = DesignMethod::kWhite;
  bool converged = true;     // false only for a stalled dual ascent
  double repair_scale = 1.0; // cumulative tau^2 applied by feasibility_repair
  std::vector<double> dual_trace;  // dual objective per accepted iteration
  std::vector<std::string> notes;

  Index kd() const { return gamma.dim(); }
};

/// Closed-form optimum for the active-set constraints:
///   S = principal square root of C*,  M_ij = (S')_ij^2,
///   v = gamma_c M^{-1} 1,  lambda_i = v_i^{-2},
///   R = sum_i lambda_i d_i d_i',  Gamma = R^{-1/2}.
/// `num_columns` sizes the multiplier vector (pass diff.count()).
/// Exact when the active columns are orthogonal; for general C* the
/// factorization step can fail, surfacing as NonSquareRootableError,
/// SingularMatrixError, or InfeasibleResultError (active constraint violated
/// beyond 1e-6 relative).
PrecisionDesign closed_form_gamma(const ActiveSet& active, double gamma_c,
                                  Index num_columns);

struct DualAscentOptions {
  double step = 0.0;    // 0 -> 0.1 * gamma_c / median(norms^2)
  int max_iter = 10000;
  double tol = 0.0;     // 0 -> 1e-7 * gamma_c, on the projected gradient
};

/// Independent oracle: projected gradient ascent on the Lagrange dual
///   g(lambda) = 2 tr(R_lambda^{1/2}) - gamma_c * sum(lambda),  lambda >= 0,
/// over all difference columns, with backtracking halving on dual decrease.
/// Returns Gamma = R^{-1/2}; a run that stalls before reaching `tol` comes
/// back with converged = false.
PrecisionDesign dual_ascent_gamma(const DifferenceMatrix& diff, double gamma_c,
                                  const DualAscentOptions& options = {});

/// Largest constraint value max_j d_j' Gamma d_j over all columns.
double max_constraint(const SymMatrix& gamma, const DifferenceMatrix& diff);

/// Enforce every constraint: tau^2 = max_j (d_j' Gamma d_j) / gamma_c; when
/// tau^2 > 1 the precision is shrunk by tau^2 (multipliers by tau^4, keeping
/// Gamma = R_lambda^{-1/2} consistent) and the scaling recorded.
PrecisionDesign feasibility_repair(PrecisionDesign design,
                                   const DifferenceMatrix& diff,
                                   double gamma_c);

/// Isotropic design Gamma = (gamma_c / delta_c^2) I, the white-mechanism
/// precision. Always feasible, used as the floor candidate.
PrecisionDesign white_design(double delta_c, double gamma_c, Index kd,
                             Index num_columns);

enum class SolverChoice { kClosedForm, kDualAscent, kAuto };

/// Production path: active-set selection, closed form first, dual-ascent
/// fallback when the closed form fails or is beaten, feasibility repair, and
/// the white design as a floor. The returned design satisfies every column
/// constraint and never exceeds the white-equivalent total variance.
PrecisionDesign design_precision(const DifferenceMatrix& diff, double gamma_c,
                                 SelectionRule rule = SelectionRule::kLargestNorm,
                                 SolverChoice solver = SolverChoice::kAuto,
                                 const DualAscentOptions& dual_options = {});

}  // namespace dpkmeans
