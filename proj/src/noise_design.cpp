#include "dpkmeans/noise_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

namespace dpkmeans {

double gamma_c(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !(delta > 0.0) || !(delta < 1.0)) {
    throw InvalidPrivacyParamsError("require epsilon > 0 and delta in (0, 1)");
  }
  return epsilon * epsilon / (2.0 * std::log(2.0 / delta));
}

double white_sigma(double delta_c, double epsilon, double delta) {
  if (!(delta_c >= 0.0)) {
    throw InvalidPrivacyParamsError("white_sigma: delta_c must be >= 0");
  }
  if (!(epsilon > 0.0) || !(delta > 0.0) || !(delta < 1.0)) {
    throw InvalidPrivacyParamsError("require epsilon > 0 and delta in (0, 1)");
  }
  return delta_c / epsilon * std::sqrt(2.0 * std::log(2.0 / delta));
}

PrivacyParams PrivacyParams::Create(double epsilon, double delta) {
  return PrivacyParams{epsilon, delta, dpkmeans::gamma_c(epsilon, delta)};
}

std::string to_string(DesignMethod method) {
  switch (method) {
    case DesignMethod::kClosedForm: return "closed_form";
    case DesignMethod::kDualAscent: return "dual_ascent";
    case DesignMethod::kWhite: return "white";
  }
  return "unknown";
}

namespace {

constexpr double kActiveViolationTol = 1e-6;   // relative, closed form
constexpr double kFeasibilityTol = 1e-8;       // relative, published designs
constexpr double kRidge = 1e-12;               // dual-ascent R regularizer

/// Principal square root of a general square matrix. Throws
/// NonSquareRootableError when an eigenvalue sits on the closed negative real
/// axis (no real principal root exists).
Matrix principal_sqrt(const Matrix& c) {
  const Index n = c.rows();
  const double scale = c.cwiseAbs().maxCoeff();
  const double sym_err = (c - c.transpose()).cwiseAbs().maxCoeff();
  if (sym_err <= 1e-12 * std::max(scale, 1.0)) {
    SymMatrix sym{c};
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym.matrix());
    const Vector& vals = es.eigenvalues();
    if (vals[0] < -1e-12 * std::max(vals[n - 1], 0.0)) {
      throw NonSquareRootableError(
          "principal_sqrt: symmetric matrix with negative eigenvalue");
    }
    Vector roots = vals.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() *
           es.eigenvectors().transpose();
  }

  Eigen::EigenSolver<Matrix> es(c);
  if (es.info() != Eigen::Success) {
    throw NonSquareRootableError("principal_sqrt: eigensolver failed");
  }
  double radius = 0.0;
  for (Index i = 0; i < n; ++i) {
    radius = std::max(radius, std::abs(es.eigenvalues()[i]));
  }
  for (Index i = 0; i < n; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev.imag()) <= 1e-12 * radius && ev.real() <= 1e-12 * radius) {
      throw NonSquareRootableError(
          "principal_sqrt: eigenvalue on the negative real axis");
    }
  }
  Matrix s = c.sqrt();
  if (!s.allFinite() ||
      ((s * s - c).cwiseAbs().maxCoeff() > 1e-6 * std::max(scale, 1.0))) {
    throw NonSquareRootableError("principal_sqrt: residual check failed");
  }
  return s;
}

/// Gamma, covariance and distortion from R = sum lambda_i d_i d_i'.
void finish_design(const SymMatrix& r, PrecisionDesign& design) {
  design.gamma = mat_inv_sqrt(r, 1e-14);
  design.covariance = mat_sqrt(r);
  design.distortion = design.covariance.trace();
}

double median(Vector v) {
  const Index n = v.size();
  std::nth_element(v.data(), v.data() + n / 2, v.data() + n);
  double hi = v[n / 2];
  if (n % 2 == 0) {
    std::nth_element(v.data(), v.data() + n / 2 - 1, v.data() + n / 2);
    return 0.5 * (hi + v[n / 2 - 1]);
  }
  return hi;
}

}  // namespace

PrecisionDesign closed_form_gamma(const ActiveSet& active, double gamma_c,
                                  Index num_columns) {
  if (!(gamma_c > 0.0)) {
    throw InvalidPrivacyParamsError("closed_form_gamma: gamma_c must be > 0");
  }
  const Matrix& c = active.matrix;
  const Index kd = c.rows();
  if (c.cols() != kd || static_cast<Index>(active.indices.size()) != kd) {
    throw DimensionError("closed_form_gamma: active set must be Kd x Kd");
  }
  for (Index idx : active.indices) {
    if (idx < 0 || idx >= num_columns) {
      throw DimensionError("closed_form_gamma: active index out of range");
    }
  }

  const Matrix s = principal_sqrt(c);
  const Matrix m = s.transpose().array().square().matrix();
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) {
    throw SingularMatrixError("closed_form_gamma: M matrix is singular");
  }
  const Vector v = gamma_c * lu.solve(Vector::Ones(kd));

  PrecisionDesign design;
  design.method = DesignMethod::kClosedForm;
  Vector lambda(kd);
  for (Index i = 0; i < kd; ++i) {
    if (!std::isfinite(v[i]) || v[i] == 0.0) {
      throw SingularMatrixError("closed_form_gamma: degenerate multiplier");
    }
    if (v[i] < 0.0) {
      design.notes.push_back("closed form: negative v component " +
                             std::to_string(i));
    }
    lambda[i] = 1.0 / (v[i] * v[i]);
  }

  const SymMatrix r{c * lambda.asDiagonal() * c.transpose()};
  finish_design(r, design);

  for (Index i = 0; i < kd; ++i) {
    const double q = design.gamma.quad(c.col(i));
    if (q > gamma_c * (1.0 + kActiveViolationTol)) {
      throw InfeasibleResultError(
          "closed_form_gamma: active constraint violated by " +
          std::to_string(q / gamma_c - 1.0));
    }
  }

  design.multipliers = Vector::Zero(num_columns);
  for (Index i = 0; i < kd; ++i) design.multipliers[active.indices[i]] = lambda[i];
  design.active = active;
  return design;
}

PrecisionDesign dual_ascent_gamma(const DifferenceMatrix& diff, double gamma_c,
                                  const DualAscentOptions& options) {
  if (!(gamma_c > 0.0)) {
    throw InvalidPrivacyParamsError("dual_ascent_gamma: gamma_c must be > 0");
  }
  const Matrix& c = diff.columns;
  const Index kd = diff.kd();
  const Index m = diff.count();
  if (m == 0) throw EmptyDifferencesError("dual_ascent_gamma: no columns");
  {
    Eigen::ColPivHouseholderQR<Matrix> qr(c);
    if (qr.rank() < kd) {
      throw RankDeficientError("dual_ascent_gamma: difference matrix not full row rank");
    }
  }

  const Vector n2 = diff.norms.array().square();
  const double med2 = std::max(median(n2), std::numeric_limits<double>::min());
  double step = options.step > 0.0 ? options.step : 0.1 * gamma_c / med2;
  const double tol = options.tol > 0.0 ? options.tol : 1e-7 * gamma_c;
  const double step_cap = step * 1e12;

  struct Eval {
    Matrix vecs;
    Vector vals;  // eigenvalues of regularized R
    double g;     // dual objective
  };
  auto eval = [&](const Vector& lambda) -> Eval {
    Matrix r = c * lambda.asDiagonal() * c.transpose();
    r = 0.5 * (r + r.transpose());
    r.diagonal().array() += kRidge;
    Eigen::SelfAdjointEigenSolver<Matrix> es(r);
    if (es.info() != Eigen::Success) {
      throw Error("dual_ascent_gamma: eigendecomposition failed");
    }
    Eval e;
    e.vecs = es.eigenvectors();
    e.vals = es.eigenvalues();
    e.g = 2.0 * e.vals.cwiseMax(0.0).cwiseSqrt().sum() - gamma_c * lambda.sum();
    return e;
  };

  Vector lambda = Vector::Constant(m, med2 * med2 / (gamma_c * gamma_c));
  Eval cur = eval(lambda);

  PrecisionDesign design;
  design.method = DesignMethod::kDualAscent;
  design.converged = false;
  design.dual_trace.push_back(cur.g);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    // gradient_j = d_j' R^{-1/2} d_j - gamma_c
    const Matrix inv_sqrt = cur.vecs *
                            cur.vals.cwiseMax(kRidge).cwiseInverse().cwiseSqrt().asDiagonal() *
                            cur.vecs.transpose();
    const Matrix w = inv_sqrt * c;
    Vector grad(m);
    for (Index j = 0; j < m; ++j) grad[j] = c.col(j).dot(w.col(j)) - gamma_c;

    double residual = 0.0;
    for (Index j = 0; j < m; ++j) {
      residual = std::max(residual,
                          lambda[j] > 0.0 ? std::abs(grad[j]) : std::max(grad[j], 0.0));
    }
    if (residual < tol) {
      design.converged = true;
      break;
    }

    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      Vector trial = (lambda + step * grad).cwiseMax(0.0);
      Eval trial_eval = eval(trial);
      if (trial_eval.g >= cur.g - 1e-12 * std::abs(cur.g)) {
        lambda = std::move(trial);
        cur = std::move(trial_eval);
        design.dual_trace.push_back(cur.g);
        step = std::min(step * 1.5, step_cap);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflowed; report best iterate
  }

  Matrix r_final = c * lambda.asDiagonal() * c.transpose();
  r_final = 0.5 * (r_final + r_final.transpose());
  r_final.diagonal().array() += kRidge;
  finish_design(SymMatrix{r_final}, design);
  design.multipliers = std::move(lambda);
  if (!design.converged) {
    design.notes.push_back("dual ascent: gradient tolerance not reached");
  }
  return design;
}

double max_constraint(const SymMatrix& gamma, const DifferenceMatrix& diff) {
  double worst = 0.0;
  for (Index j = 0; j < diff.count(); ++j) {
    worst = std::max(worst, gamma.quad(diff.columns.col(j)));
  }
  return worst;
}

PrecisionDesign feasibility_repair(PrecisionDesign design,
                                   const DifferenceMatrix& diff,
                                   double gamma_c) {
  const double tau2 = max_constraint(design.gamma, diff) / gamma_c;
  if (tau2 <= 1.0) return design;
  design.gamma = SymMatrix{design.gamma.matrix() / tau2};
  design.covariance = SymMatrix{design.covariance.matrix() * tau2};
  design.distortion *= tau2;
  design.multipliers *= tau2 * tau2;
  design.repair_scale *= tau2;
  design.notes.push_back("feasibility repair scaled precision by " +
                         std::to_string(tau2));
  return design;
}

PrecisionDesign white_design(double delta_c, double gamma_c, Index kd,
                             Index num_columns) {
  if (!(delta_c > 0.0)) {
    throw DegenerateDataError("white_design: zero sensitivity");
  }
  if (!(gamma_c > 0.0)) {
    throw InvalidPrivacyParamsError("white_design: gamma_c must be > 0");
  }
  const double sigma2 = delta_c * delta_c / gamma_c;
  PrecisionDesign design;
  design.method = DesignMethod::kWhite;
  design.gamma = SymMatrix{Matrix::Identity(kd, kd) / sigma2};
  design.covariance = SymMatrix{Matrix::Identity(kd, kd) * sigma2};
  design.distortion = static_cast<double>(kd) * sigma2;
  design.multipliers = Vector::Zero(num_columns);
  return design;
}

PrecisionDesign design_precision(const DifferenceMatrix& diff, double gamma_c,
                                 SelectionRule rule, SolverChoice solver,
                                 const DualAscentOptions& dual_options) {
  if (solver == SolverChoice::kClosedForm) {
    return feasibility_repair(
        closed_form_gamma(select_active_set(diff, rule), gamma_c, diff.count()),
        diff, gamma_c);
  }
  if (solver == SolverChoice::kDualAscent) {
    return feasibility_repair(dual_ascent_gamma(diff, gamma_c, dual_options),
                              diff, gamma_c);
  }

  const double delta_c = sensitivity_delta(diff);
  PrecisionDesign white =
      white_design(delta_c, gamma_c, diff.kd(), diff.count());

  std::vector<std::string> notes;
  std::optional<PrecisionDesign> closed;
  try {
    closed = feasibility_repair(
        closed_form_gamma(select_active_set(diff, rule), gamma_c, diff.count()),
        diff, gamma_c);
  } catch (const Error& e) {
    notes.push_back(std::string("closed form unavailable: ") + e.what());
  }

  bool need_oracle = !closed.has_value();
  if (closed) {
    if (closed->repair_scale > 1.0 + 1e-9) {
      need_oracle = true;
      notes.push_back("closed form needed feasibility repair");
    }
    if (max_constraint(closed->gamma, diff) < gamma_c * (1.0 - 1e-3)) {
      need_oracle = true;
      notes.push_back("closed form left every constraint slack");
    }
    if (closed->distortion > white.distortion * (1.0 + 1e-12)) {
      need_oracle = true;
      notes.push_back("closed form distortion exceeds white equivalent");
    }
  }

  std::optional<PrecisionDesign> oracle;
  if (need_oracle) {
    try {
      oracle = feasibility_repair(dual_ascent_gamma(diff, gamma_c, dual_options),
                                  diff, gamma_c);
    } catch (const Error& e) {
      notes.push_back(std::string("dual ascent unavailable: ") + e.what());
    }
  }

  PrecisionDesign* best = &white;
  if (oracle && oracle->distortion < best->distortion) best = &*oracle;
  if (closed && closed->distortion < best->distortion) best = &*closed;

  PrecisionDesign result = std::move(*best);
  result.notes.insert(result.notes.end(), notes.begin(), notes.end());
  return result;
}

}  // namespace dpkmeans
