#include "todasurf/transport.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace todasurf {

namespace {

constexpr double kCurvatureWarnThreshold = 1e-6;

/// ad matrices -sigma * ad(a_mu) and -sigma * ad(da_mu/dlambda) at arclength s
/// along an axis-aligned segment.
struct SegmentOps {
  Mat A;
  Mat B;
};

struct Segment {
  PathPoint from;
  double sigma = 1.0;
  double length = 0.0;
  bool along_z = true;

  PathPoint at(double s) const {
    PathPoint p = from;
    (along_z ? p.z : p.zbar) += sigma * s;
    return p;
  }
};

SegmentOps segment_ops(const TodaModel& model, const FieldConfig& fields,
                       const Segment& seg, double s, bool with_lambda) {
  PathPoint p = seg.at(s);
  GaugeData gd = gauge_at(model, fields, p.z, p.zbar);
  SegmentOps ops;
  ops.A = -seg.sigma * model.algebra->ad(seg.along_z ? gd.a1 : gd.a2);
  if (with_lambda)
    ops.B = -seg.sigma * model.algebra->ad(seg.along_z ? gd.a1_l : gd.a2_l);
  return ops;
}

/// Classic RK4 for U' = A(s) U and (optionally) W' = A(s) W + B(s) U.
void integrate_segment(const TodaModel& model, const FieldConfig& fields,
                       const Segment& seg, double step, Mat& U, Mat* W) {
  if (seg.length == 0.0) return;
  const bool with_l = W != nullptr;
  const int n = std::max(1, static_cast<int>(std::ceil(seg.length / step)));
  const double h = seg.length / n;
  for (int k = 0; k < n; ++k) {
    const double s = k * h;
    SegmentOps o1 = segment_ops(model, fields, seg, s, with_l);
    SegmentOps o2 = segment_ops(model, fields, seg, s + 0.5 * h, with_l);
    SegmentOps o4 = segment_ops(model, fields, seg, s + h, with_l);

    Mat ku1 = o1.A * U;
    Mat ku2 = o2.A * (U + 0.5 * h * ku1);
    Mat ku3 = o2.A * (U + 0.5 * h * ku2);
    Mat ku4 = o4.A * (U + h * ku3);
    if (with_l) {
      Mat& Wm = *W;
      Mat kw1 = o1.A * Wm + o1.B * U;
      Mat kw2 = o2.A * (Wm + 0.5 * h * kw1) + o2.B * (U + 0.5 * h * ku1);
      Mat kw3 = o2.A * (Wm + 0.5 * h * kw2) + o2.B * (U + 0.5 * h * ku2);
      Mat kw4 = o4.A * (Wm + h * kw3) + o4.B * (U + h * ku3);
      Wm += (h / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4);
    }
    U += (h / 6.0) * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4);
  }
}

std::vector<Segment> to_segments(const Staircase& path) {
  std::vector<Segment> segs;
  for (size_t k = 0; k + 1 < path.waypoints.size(); ++k) {
    const PathPoint& a = path.waypoints[k];
    const PathPoint& b = path.waypoints[k + 1];
    double dz = b.z - a.z, dw = b.zbar - a.zbar;
    if (dz == 0.0 && dw == 0.0) continue;
    Segment s;
    s.from = a;
    s.along_z = dw == 0.0;
    double d = s.along_z ? dz : dw;
    s.sigma = d > 0.0 ? 1.0 : -1.0;
    s.length = std::abs(d);
    segs.push_back(s);
  }
  return segs;
}

double sample_curvature(const TodaModel& model, const FieldConfig& fields,
                        const std::vector<Segment>& segs) {
  double worst = 0.0;
  auto probe = [&](const PathPoint& p) {
    worst = std::max(
        worst, zero_curvature_residual(model, fields, p.z, p.zbar).cwiseAbs().maxCoeff());
  };
  for (const Segment& s : segs) {
    probe(s.at(0.0));
    probe(s.at(0.5 * s.length));
    probe(s.at(s.length));
  }
  if (segs.empty()) return worst;
  return worst;
}

}  // namespace

Staircase Staircase::z_first(PathPoint a, PathPoint b) {
  return Staircase{{a, {b.z, a.zbar}, b}};
}

Staircase Staircase::zbar_first(PathPoint a, PathPoint b) {
  return Staircase{{a, {a.z, b.zbar}, b}};
}

void Staircase::check() const {
  if (waypoints.empty()) throw std::invalid_argument("Staircase: no waypoints");
  for (size_t k = 0; k + 1 < waypoints.size(); ++k) {
    double dz = std::abs(waypoints[k + 1].z - waypoints[k].z);
    double dw = std::abs(waypoints[k + 1].zbar - waypoints[k].zbar);
    double tol = 1e-12 * std::max(1.0, std::max(dz, dw));
    if (dz > tol && dw > tol) {
      std::ostringstream os;
      os << "Staircase: segment " << k << " is not axis-aligned (dz = " << dz
         << ", dzbar = " << dw << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

TransportState transport(const TodaModel& model, const FieldConfig& fields,
                         const Staircase& path, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("transport: need step > 0");
  path.check();
  std::vector<Segment> segs = to_segments(path);

  TransportState st;
  st.path = path;
  st.step = step;
  st.lambda = model.lambda;
  st.U = Mat::Identity(model.algebra->dim(), model.algebra->dim());
  for (const Segment& s : segs)
    integrate_segment(model, fields, s, step, st.U, nullptr);
  st.curvature_check = sample_curvature(model, fields, segs);
  st.non_solution_warning = st.curvature_check > kCurvatureWarnThreshold;
  return st;
}

TransportPair transport_with_lambda(const TodaModel& model, const FieldConfig& fields,
                                    const Staircase& path, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("transport: need step > 0");
  path.check();
  TransportPair pair;
  const int d = model.algebra->dim();
  pair.U = Mat::Identity(d, d);
  pair.U_lambda = Mat::Zero(d, d);
  for (const Segment& s : to_segments(path))
    integrate_segment(model, fields, s, step, pair.U, &pair.U_lambda);
  return pair;
}

namespace {

Vec project_position(const LieAlgebra& g, const Mat& U, const Mat& U_lambda,
                     double* ad_residual) {
  Mat M = U.partialPivLu().solve(U_lambda);
  double res = 0.0;
  Vec r = g.element_from_ad(M, &res);
  if (ad_residual) *ad_residual = res;
  if (res > 1e-5 * std::max(1.0, M.norm())) {
    std::ostringstream os;
    os << "position vector: U^{-1} dU/dlambda is not an adjoint matrix (projection "
          "residual "
       << res << ")";
    throw std::runtime_error(os.str());
  }
  return r;
}

}  // namespace

Vec position_vector(const TodaModel& model, const FieldConfig& fields,
                    const TransportState& state, LambdaMode mode, double delta,
                    double* ad_residual) {
  const LieAlgebra& g = *model.algebra;
  if (mode == LambdaMode::variational) {
    TransportPair pair = transport_with_lambda(model, fields, state.path, state.step);
    return project_position(g, pair.U, pair.U_lambda, ad_residual);
  }
  if (!(delta > 0.0)) throw std::invalid_argument("position_vector: need delta > 0");
  Mat U_p =
      transport(model.with_lambda(model.lambda + delta), fields, state.path, state.step)
          .U;
  Mat U_m =
      transport(model.with_lambda(model.lambda - delta), fields, state.path, state.step)
          .U;
  Mat U_l = (U_p - U_m) / (2.0 * delta);
  return project_position(g, state.U, U_l, ad_residual);
}

namespace {

/// March U (and optionally W) over the grid: first along zbar on row 0, then down
/// each column in z, so each node carries the zbar-first staircase from the origin.
void grid_sweep(const TodaModel& model, const FieldConfig& fields, const GridSpec& grid,
                double step, std::vector<Mat>& U, std::vector<Mat>* W) {
  const int d = model.algebra->dim();
  auto idx = [&](int i, int j) { return i * grid.nzbar + j; };
  U.assign(static_cast<size_t>(grid.nz) * grid.nzbar, Mat());
  if (W) W->assign(U.size(), Mat());

  U[0] = Mat::Identity(d, d);
  if (W) (*W)[0] = Mat::Zero(d, d);
  for (int j = 1; j < grid.nzbar; ++j) {
    Segment s;
    s.from = {grid.z(0), grid.zbar(j - 1)};
    s.along_z = false;
    s.sigma = grid.dzbar > 0.0 ? 1.0 : -1.0;
    s.length = std::abs(grid.dzbar);
    U[idx(0, j)] = U[idx(0, j - 1)];
    if (W) (*W)[idx(0, j)] = (*W)[idx(0, j - 1)];
    integrate_segment(model, fields, s, step, U[idx(0, j)],
                      W ? &(*W)[idx(0, j)] : nullptr);
  }
  for (int j = 0; j < grid.nzbar; ++j)
    for (int i = 1; i < grid.nz; ++i) {
      Segment s;
      s.from = {grid.z(i - 1), grid.zbar(j)};
      s.along_z = true;
      s.sigma = grid.dz > 0.0 ? 1.0 : -1.0;
      s.length = std::abs(grid.dz);
      U[idx(i, j)] = U[idx(i - 1, j)];
      if (W) (*W)[idx(i, j)] = (*W)[idx(i - 1, j)];
      integrate_segment(model, fields, s, step, U[idx(i, j)],
                        W ? &(*W)[idx(i, j)] : nullptr);
    }
}

}  // namespace

ImmersionPatch immersion_patch(const TodaModel& model, const FieldConfig& fields,
                               const GridSpec& grid, double step, LambdaMode mode,
                               double delta) {
  if (grid.nz < 1 || grid.nzbar < 1)
    throw std::invalid_argument("immersion_patch: empty grid");
  if (!(step > 0.0)) throw std::invalid_argument("immersion_patch: need step > 0");
  const LieAlgebra& g = *model.algebra;

  ImmersionPatch patch;
  patch.grid = grid;
  patch.lambda = model.lambda;

  std::vector<Mat> W;
  std::vector<Mat> U_p, U_m;
  if (mode == LambdaMode::variational) {
    grid_sweep(model, fields, grid, step, patch.U, &W);
  } else {
    if (!(delta > 0.0)) throw std::invalid_argument("immersion_patch: need delta > 0");
    grid_sweep(model, fields, grid, step, patch.U, nullptr);
    std::vector<Mat> tmp;
    grid_sweep(model.with_lambda(model.lambda + delta), fields, grid, step, U_p,
               nullptr);
    grid_sweep(model.with_lambda(model.lambda - delta), fields, grid, step, U_m,
               nullptr);
  }

  patch.r.resize(patch.U.size());
  for (size_t k = 0; k < patch.U.size(); ++k) {
    Mat U_l = mode == LambdaMode::variational ? W[k]
                                              : Mat((U_p[k] - U_m[k]) / (2.0 * delta));
    double res = 0.0;
    patch.r[k] = project_position(g, patch.U[k], U_l, &res);
    patch.max_ad_residual = std::max(patch.max_ad_residual, res);
  }

  for (int i = 0; i < grid.nz; ++i)
    for (int j = 0; j < grid.nzbar; ++j)
      patch.curvature_check = std::max(
          patch.curvature_check,
          zero_curvature_residual(model, fields, grid.z(i), grid.zbar(j))
              .cwiseAbs()
              .maxCoeff());
  patch.non_solution_warning = patch.curvature_check > kCurvatureWarnThreshold;
  return patch;
}

}  // namespace todasurf
