#pragma once

#include <vector>

#include "todasurf/toda.hpp"

namespace todasurf {

struct PathPoint {
  double z = 0.0;
  double zbar = 0.0;
};

/// Piecewise axis-aligned path in the (z, zbar) rectangle.
struct Staircase {
  std::vector<PathPoint> waypoints;

  /// a -> (b.z, a.zbar) -> b.
  static Staircase z_first(PathPoint a, PathPoint b);
  /// a -> (a.z, b.zbar) -> b.
  static Staircase zbar_first(PathPoint a, PathPoint b);

  void check() const;  ///< throws std::invalid_argument unless axis-aligned
  const PathPoint& start() const { return waypoints.front(); }
  const PathPoint& end() const { return waypoints.back(); }
};

/// Solution of (d_mu + a_mu) U = 0 along a path, in the adjoint representation,
/// normalized to U = identity at the path start.
struct TransportState {
  Mat U;
  Staircase path;
  double step = 1e-3;
  double lambda = 0.0;
  double curvature_check = 0.0;    ///< max |zero-curvature residual| sampled on the path
  bool non_solution_warning = false;  ///< curvature_check above 1e-6
};

TransportState transport(const TodaModel& model, const FieldConfig& fields,
                         const Staircase& path, double step);

/// How dU/dlambda is obtained: by re-transporting at lambda +- delta, or in one
/// sweep from the variational equation dW/ds = -ad(a) W - ad(da/dlambda) U.
enum class LambdaMode { central_difference, variational };

struct TransportPair {
  Mat U;
  Mat U_lambda;
};
TransportPair transport_with_lambda(const TodaModel& model, const FieldConfig& fields,
                                    const Staircase& path, double step);

/// Position vector r = u^{-1} du/dlambda of the immersion at the path end, as an
/// algebra element (defined up to the constant contribution of the base point).
/// Throws std::runtime_error if U^{-1} dU/dlambda fails to project onto the ad
/// image within tolerance.
Vec position_vector(const TodaModel& model, const FieldConfig& fields,
                    const TransportState& state,
                    LambdaMode mode = LambdaMode::central_difference,
                    double delta = 1e-5, double* ad_residual = nullptr);

/// Immersion data over a grid: transported frames U and position vectors r per
/// node, built by incremental staircase marching from the grid origin.
struct ImmersionPatch {
  GridSpec grid;
  double lambda = 0.0;
  std::vector<Mat> U;   ///< row-major (i * nzbar + j)
  std::vector<Vec> r;   ///< algebra coefficients per node
  double max_ad_residual = 0.0;
  double curvature_check = 0.0;
  bool non_solution_warning = false;

  int index(int i, int j) const { return i * grid.nzbar + j; }
};

ImmersionPatch immersion_patch(const TodaModel& model, const FieldConfig& fields,
                               const GridSpec& grid, double step,
                               LambdaMode mode = LambdaMode::central_difference,
                               double delta = 1e-5);

}  // namespace todasurf
