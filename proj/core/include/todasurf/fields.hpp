#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace todasurf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace detail {
/// Second-order finite difference along one sample line g(0..n-1) at index j.
inline double fd_line(const std::function<double(int)>& g, int n, int j, double step) {
  if (n == 2) return (g(1) - g(0)) / step;
  if (j == 0) return (-3.0 * g(0) + 4.0 * g(1) - g(2)) / (2.0 * step);
  if (j == n - 1) return (3.0 * g(n - 1) - 4.0 * g(n - 2) + g(n - 3)) / (2.0 * step);
  return (g(j + 1) - g(j - 1)) / (2.0 * step);
}
}  // namespace detail

/// Rectangle in the light-cone coordinates (z, zbar).
struct Domain {
  double z_min = 0.0, z_max = 1.0;
  double zbar_min = 0.0, zbar_max = 1.0;

  bool contains(double z, double zbar, double slack = 0.0) const {
    return z >= z_min - slack && z <= z_max + slack && zbar >= zbar_min - slack &&
           zbar <= zbar_max + slack;
  }
  double z_span() const { return z_max - z_min; }
  double zbar_span() const { return zbar_max - zbar_min; }
};

/// Field values and first partial derivatives at one point; index 1 is d/dz,
/// index 2 is d/dzbar.
struct FieldPoint {
  Vec phi;
  Vec d1;
  Vec d2;
};

/// Uniform rectangular grid layout.
struct GridSpec {
  double z_min = 0.0, zbar_min = 0.0;
  double dz = 0.0, dzbar = 0.0;
  int nz = 0, nzbar = 0;

  double z(int i) const { return z_min + i * dz; }
  double zbar(int j) const { return zbar_min + j * dzbar; }
  Domain domain() const {
    return {z_min, z_min + (nz - 1) * dz, zbar_min, zbar_min + (nzbar - 1) * dzbar};
  }
};

/// Sampled field configuration: per field one nz x nzbar matrix of values and of
/// each first derivative, indexed (i, j) = (z index, zbar index).
struct GridData {
  GridSpec spec;
  std::vector<Mat> phi;
  std::vector<Mat> d1;
  std::vector<Mat> d2;

  int n_fields() const { return static_cast<int>(phi.size()); }
  void check() const;  ///< throws std::invalid_argument on inconsistent shapes
};

/// A Toda field configuration phi_i(z, zbar): either closed-form callables with
/// analytic derivatives or a sampled grid evaluated by C^1 Hermite bicubic
/// interpolation. Copies are cheap (shared immutable state).
class FieldConfig {
 public:
  enum class Kind { closed_form, grid };

  using EvalFn = std::function<FieldPoint(double, double)>;
  using CrossFn = std::function<Vec(double, double)>;

  FieldConfig() = default;

  /// cross (the mixed derivative d1 d2 phi) may be empty; it is then estimated
  /// by a central 4-point stencil of width fd_step.
  static FieldConfig closed_form(int n_fields, Domain domain, EvalFn eval,
                                 CrossFn cross = nullptr, std::string name = "");
  static FieldConfig grid(GridData data, std::string name = "");

  bool valid() const { return impl_ != nullptr; }
  Kind kind() const;
  int n_fields() const;
  const Domain& domain() const;
  const std::string& name() const;

  /// Values and first derivatives; throws std::domain_error outside the domain.
  FieldPoint at(double z, double zbar) const;

  bool has_analytic_cross() const;
  /// Mixed derivative d1 d2 phi_i. Closed forms use the analytic callable when
  /// present, else a 4-point cross stencil of width fd_step; grids use central
  /// differences of the stored d/dz samples at the grid spacing.
  Vec cross(double z, double zbar) const;

  double fd_step() const;
  void set_fd_step(double h);

  const GridData* grid_data() const;  ///< non-null only for grid configs

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double fd_step_ = 1e-6;
};

/// Samples any configuration onto a grid (derivatives included).
GridData sample_to_grid(const FieldConfig& fields, const GridSpec& spec);

/// CSV exchange format: header "z,zbar,phi_1..phi_n,dphi1_1..dphi1_n,dphi2_1..
/// dphi2_n", one row per node, z-major row order. load throws ParseError on
/// malformed files (missing header, ragged rows, non-uniform or incomplete grid).
void save_grid_csv(const std::string& path, const GridData& data);
GridData load_grid_csv(const std::string& path);

}  // namespace todasurf
