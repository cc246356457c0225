#pragma once

#include <array>
#include <vector>

#include "todasurf/toda.hpp"

namespace todasurf {

/// Induced metric g_{alpha beta} = c k(a_{alpha,lambda}, a_{beta,lambda}) at a point.
struct Metric2 {
  Eigen::Matrix2d g;
  Eigen::Matrix2d inv;      ///< meaningful only when !degenerate
  double det = 0.0;
  bool degenerate = false;  ///< |det| below tolerance relative to the entry scale
};

Metric2 induced_metric(const TodaModel& model, const GaugeData& gd);

/// Christoffel symbols: gamma[mu](alpha, beta) = Gamma^mu_{alpha beta}.
using Christoffel = std::array<Eigen::Matrix2d, 2>;

/// Gamma^mu_{ab} = c g^{rm} k(a_{r,lambda}, a_{a,b lambda} - [a_{a,lambda}, a_b]),
/// exact at the point (no finite differences). Symmetric in (a,b) exactly when the
/// configuration satisfies the zero-curvature condition.
Christoffel christoffel_direct(const TodaModel& model, const GaugeData& gd);

/// Levi-Civita symbols of the induced metric, with metric derivatives taken by
/// central differences of width h.
Christoffel christoffel_metric(const TodaModel& model, const FieldConfig& fields,
                               double z, double zbar, double h = 1e-3);

/// Orthonormal frame of the normal space: k(a_{mu,lambda}, N0_A) = 0 and
/// c k(N0_A, N0_B) = eta_A delta_AB with eta_A = +-1.
struct NormalFrame {
  std::vector<Vec> N0;
  std::vector<int> eta;
  int nu_perp() const;  ///< number of eta entries equal to -1
};

/// Deterministic frame built by projecting the basis onto the normal space and
/// orthonormalizing with the greedy pivoted scheme.
NormalFrame normal_frame(const TodaModel& model, const GaugeData& gd);

/// Frame at a nearby point obtained by projecting the seed frame onto the local
/// normal space and re-orthonormalizing in order (no pivoting), so that the frame
/// field varies smoothly with the base point. Throws if the signature drifts.
NormalFrame aligned_normal_frame(const TodaModel& model, const GaugeData& gd,
                                 const NormalFrame& seed);

/// Second fundamental form components: result[C](alpha, beta) = b_{C alpha beta}
/// = c k(N0_C, [a_{alpha,lambda}, a_beta] - a_{alpha,beta lambda}). Exact at the point.
std::vector<Eigen::Matrix2d> second_form(const TodaModel& model, const GaugeData& gd,
                                         const NormalFrame& frame);

/// Same components through the Weingarten route
/// b_{C alpha beta} = c k(a_{beta,lambda}, N0_{C,alpha} + [a_alpha, N0_C]),
/// with the frame derivative taken by central differences of width h.
std::vector<Eigen::Matrix2d> second_form_dual(const TodaModel& model,
                                              const FieldConfig& fields, double z,
                                              double zbar, const NormalFrame& frame,
                                              double h = 1e-3);

/// Normal connection coefficients mu_{B A alpha} = c k(N0_B, N0_{A,alpha}
/// + [a_alpha, N0_A]): result[alpha-1](B, A), frame derivatives by central
/// differences of width h. Antisymmetric in (B, A).
std::array<Mat, 2> normal_connection(const TodaModel& model, const FieldConfig& fields,
                                     double z, double zbar, const NormalFrame& frame,
                                     double h = 1e-3);

enum class CurvatureMode {
  closed_form,        ///< exact expression K = g12 d1(n/d) expanded analytically
  finite_difference,  ///< K = -g_{1m} R^m_{212} with Christoffel derivatives by FD
};

double gaussian_curvature(const TodaModel& model, const FieldConfig& fields, double z,
                          double zbar, CurvatureMode mode, double h = 1e-3);

/// Curvature predicted by the Gauss equation from the second fundamental form:
/// K = -eta^{CD} (b_{C12} b_{D12} - b_{C11} b_{D22}).
double gauss_equation_curvature(const TodaModel& model, const GaugeData& gd,
                                const NormalFrame& frame);

/// Orthonormal tangent pair in the comoving frame, built from the
/// lambda-derivative potentials: c k(V1, V1) = 1, c k(V2, V2) = -1 and
/// c k(V1, V2) = 0 at every non-degenerate point, for either sign of c —
/// so the tangent signature is (+, -) and the submanifold index is 1.
struct TangentPair {
  Vec V1;
  Vec V2;
};

/// Throws std::domain_error at degenerate points (k(eps+, B eps- B^{-1}) = 0).
TangentPair tangent_pair(const TodaModel& model, const GaugeData& gd);

/// Mean curvature vector in the comoving frame.
struct MeanCurvature {
  Vec h0;              ///< algebra element; the ambient field is U^{-1} h0 U
  Vec hat;             ///< components on the normal frame: h0 = hat^A N0_A
  double norm2 = 0.0;  ///< c k(h0, h0), invariant under the ambient conjugation
};

MeanCurvature mean_curvature(const TodaModel& model, const GaugeData& gd,
                             const NormalFrame& frame);

/// Max component of the normal-bundle derivative of the mean curvature vector,
/// max_{A,alpha} | d_alpha hat^A + hat^C mu^A_{C alpha} |.
double mean_curvature_normal_derivative(const TodaModel& model,
                                        const FieldConfig& fields, double z,
                                        double zbar, const NormalFrame& frame,
                                        double h = 1e-3);

/// Max-abs residuals of the Gauss, Codazzi and Ricci equations for a flat ambient
/// space. Coordinate derivatives are central differences of width h. For a
/// hypersurface (one normal direction) the Ricci equation is trivial: both sides
/// vanish identically by antisymmetry of the normal connection, and the residual
/// is reported as exactly zero.
struct GcrResiduals {
  double gauss = 0.0;
  double codazzi = 0.0;
  double ricci = 0.0;
};

GcrResiduals gcr_residuals(const TodaModel& model, const FieldConfig& fields, double z,
                           double zbar, double h = 1e-3);

/// Transform the configuration by the constant group element exp(x), map the frame
/// along (N0 -> Ad_exp(x) N0), recompute metric, Christoffel symbols, both second
/// fundamental form routes and the normal connection, and return the largest
/// deviation from the untransformed values.
double gauge_invariance_deviation(const TodaModel& model, const FieldConfig& fields,
                                  double z, double zbar, const Vec& x,
                                  double h = 1e-3);

}  // namespace todasurf
