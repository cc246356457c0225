#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "todasurf/algebra.hpp"
#include "todasurf/fields.hpp"

namespace todasurf {

/// A conformal Toda model with abelian zero-grade factor: group element
/// B = exp(sum_i phi_i h_i), constant grade +-1 elements eps_plus/eps_minus
/// (mu factors included), metric scale c and spectral parameter lambda.
struct TodaModel {
  std::shared_ptr<const LieAlgebra> algebra;
  Grading grading;
  Vec eps_plus;
  Vec eps_minus;
  std::vector<Vec> cartan_dirs;  ///< h_i spanning the abelian zero-grade parametrization
  double mu_plus = 1.0;
  double mu_minus = 1.0;
  double c = 1.0;
  double lambda = 0.0;

  int n_fields() const { return static_cast<int>(cartan_dirs.size()); }

  /// Checks grades of eps_plus/eps_minus, that the cartan_dirs are independent
  /// commuting zero-grade elements, and (unless allow_zero_eps) that both eps
  /// elements are nonzero. Throws std::runtime_error on violation.
  void validate(bool allow_zero_eps = false) const;

  /// Model at a different spectral parameter (shares the algebra).
  TodaModel with_lambda(double new_lambda) const;
};

/// Standard model on build_sl output: eps_plus = mu_plus * sum_i E_{alpha_i},
/// eps_minus = mu_minus * sum_i E_{-alpha_i}, cartan_dirs = {h_i}.
TodaModel make_sl_toda(const SlAlgebra& sl, double mu_plus, double mu_minus, double c,
                       double lambda = 0.0, bool allow_zero_eps = false);

/// Gauge potential data at one point: the flat connection components and their
/// analytic lambda- and mixed derivatives. Index 1 is d/dz, 2 is d/dzbar,
/// trailing l is d/dlambda.
struct GaugeData {
  Vec a1, a2;
  Vec a1_l, a2_l;
  Vec a1_1l, a1_2l;
  Vec a2_1l, a2_2l;
  Vec ad_B_eps_minus;  ///< B eps_minus B^{-1}
  Vec dB_Binv_2;       ///< (d/dzbar B) B^{-1} = sum_i d2 phi_i h_i
};

GaugeData gauge_at(const TodaModel& model, const FieldConfig& fields, double z,
                   double zbar);

/// Right-hand side of the field equations: the vector r with
/// d1 d2 phi_i = r_i(phi), obtained by expanding -[eps_minus, B^{-1} eps_plus B]
/// over the cartan_dirs.
Vec toda_rhs(const TodaModel& model, const Vec& phi);

/// Per-field residual d1 d2 phi_i - r_i(phi).
Vec field_residual(const TodaModel& model, const FieldConfig& fields, double z,
                   double zbar);

/// Algebra-valued curvature F = d1 a2 - d2 a1 + [a1, a2] of the gauge potential
/// at the model's lambda; identically zero exactly on solutions.
Vec zero_curvature_residual(const TodaModel& model, const FieldConfig& fields,
                            double z, double zbar);

/// Closed-form solution families. Understood names:
///  - "liouville_log":  phi_i = s * ln(a (z + zbar)), valid where z + zbar > 0
///                      (default domain keeps z + zbar >= 0.1);
///  - "liouville_cosh": phi_i = s * ln cosh(a (z + zbar));
///  - "vacuum_perturbation_grid": free-field configuration f_i(z) + g_i(zbar)
///                      sampled onto a grid (exact for zero coupling mu+ mu- = 0).
/// The shape factor s is 1 for one field and 2 for two; only ranks 1 and 2 are
/// supported. params: "a" (amplitude, default 1), domain overrides "z_min",
/// "z_max", "zbar_min", "zbar_max", and for the grid solution "amp", "freq",
/// "nz", "nzbar". Throws std::invalid_argument for unknown names/ranks.
FieldConfig exact_solution(const std::string& name, int n_fields,
                           const std::map<std::string, double>& params = {});

/// The product mu_plus * mu_minus for which the named solution satisfies the
/// field equations (0 for the free-field grid).
double required_mu_product(const std::string& name, int n_fields,
                           const std::map<std::string, double>& params = {});

/// Characteristic initial-value solver: data on the edges z = z_min and
/// zbar = zbar_min, marched with a second-order predictor/corrector at step h.
struct GoursatResult {
  FieldConfig fields;     ///< grid configuration over the solved domain
  double max_residual;    ///< max |field_residual| over interior nodes
  bool truncated;         ///< marching aborted on non-finite values
  int rows_completed;     ///< z-layers present in the returned grid
};

GoursatResult goursat_solve(const TodaModel& model,
                            const std::function<Vec(double)>& phi_on_z_min,
                            const std::function<Vec(double)>& phi_on_zbar_min,
                            const Domain& domain, double h);

}  // namespace todasurf
