#include "todasurf/algebra.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace todasurf {

int Grading::max_grade() const {
  int m = 0;
  for (int g : grade) m = std::max(m, std::abs(g));
  return m;
}

int KillingFrame::negative_count() const {
  return static_cast<int>(std::count(sign.begin(), sign.end(), -1));
}

LieAlgebra::LieAlgebra(std::vector<std::string> labels, std::vector<Mat> structure,
                       double killing_scale)
    : dim_(static_cast<int>(labels.size())),
      labels_(std::move(labels)),
      structure_(std::move(structure)),
      killing_scale_(killing_scale) {
  if (dim_ == 0) throw std::invalid_argument("LieAlgebra: empty basis");
  if (static_cast<int>(structure_.size()) != dim_)
    throw std::invalid_argument("LieAlgebra: need one structure matrix per basis vector");
  for (const Mat& c : structure_)
    if (c.rows() != dim_ || c.cols() != dim_)
      throw std::invalid_argument("LieAlgebra: structure matrix has wrong shape");
  if (!(killing_scale_ > 0.0))
    throw std::invalid_argument("LieAlgebra: killing_scale must be positive");

  ad_basis_.resize(dim_);
  for (int i = 0; i < dim_; ++i) {
    ad_basis_[i].resize(dim_, dim_);
    for (int k = 0; k < dim_; ++k)
      for (int j = 0; j < dim_; ++j) ad_basis_[i](k, j) = structure_[k](i, j);
  }

  killing_.resize(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      killing_(i, j) = killing_(j, i) =
          killing_scale_ * (ad_basis_[i] * ad_basis_[j]).trace();

  ad_flat_.resize(dim_ * dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    ad_flat_.col(i) = Eigen::Map<const Vec>(ad_basis_[i].data(), dim_ * dim_);
  ad_flat_qr_ = std::make_shared<Eigen::ColPivHouseholderQR<Mat>>(ad_flat_);
}

int LieAlgebra::label_index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    throw std::invalid_argument("LieAlgebra: unknown basis label '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

namespace {
void check_dim(const Vec& x, int dim, const char* who) {
  if (x.size() != dim) {
    std::ostringstream os;
    os << who << ": element has " << x.size() << " coefficients, algebra dimension is "
       << dim;
    throw std::invalid_argument(os.str());
  }
}
}  // namespace

Mat LieAlgebra::ad(const Vec& x) const {
  check_dim(x, dim_, "LieAlgebra::ad");
  Mat m = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    if (x[i] != 0.0) m += x[i] * ad_basis_[i];
  return m;
}

Vec LieAlgebra::bracket(const Vec& x, const Vec& y) const {
  check_dim(x, dim_, "LieAlgebra::bracket");
  check_dim(y, dim_, "LieAlgebra::bracket");
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i)
    if (x[i] != 0.0) out.noalias() += x[i] * (ad_basis_[i] * y);
  return out;
}

double LieAlgebra::killing(const Vec& x, const Vec& y) const {
  check_dim(x, dim_, "LieAlgebra::killing");
  check_dim(y, dim_, "LieAlgebra::killing");
  return x.dot(killing_ * y);
}

Mat LieAlgebra::ad_exp(const Vec& x) const { return ad(x).exp(); }

Vec LieAlgebra::ad_exp_apply(const Vec& x, const Vec& y) const {
  check_dim(y, dim_, "LieAlgebra::ad_exp_apply");
  return ad_exp(x) * y;
}

Vec LieAlgebra::element_from_ad(const Mat& M, double* residual) const {
  if (M.rows() != dim_ || M.cols() != dim_)
    throw std::invalid_argument("LieAlgebra::element_from_ad: matrix has wrong shape");
  Vec rhs = Eigen::Map<const Vec>(M.data(), dim_ * dim_);
  Vec x = ad_flat_qr_->solve(rhs);
  if (residual) *residual = (ad_flat_ * x - rhs).norm();
  return x;
}

void LieAlgebra::validate(double tol) const {
  double cscale = 1.0;
  for (const Mat& c : structure_) cscale = std::max(cscale, c.cwiseAbs().maxCoeff());

  for (int k = 0; k < dim_; ++k) {
    double dev = (structure_[k] + structure_[k].transpose()).cwiseAbs().maxCoeff();
    if (dev > tol * cscale) {
      std::ostringstream os;
      os << "LieAlgebra::validate: antisymmetry violated in component " << k << " by "
         << dev;
      throw std::runtime_error(os.str());
    }
  }

  // Jacobi identity <=> ad is a Lie algebra homomorphism on the basis.
  double ad_scale = 1.0;
  for (const Mat& a : ad_basis_) ad_scale = std::max(ad_scale, a.cwiseAbs().maxCoeff());
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) {
      Mat lhs = ad(bracket(Vec::Unit(dim_, i), Vec::Unit(dim_, j)));
      Mat rhs = ad_basis_[i] * ad_basis_[j] - ad_basis_[j] * ad_basis_[i];
      double dev = (lhs - rhs).cwiseAbs().maxCoeff();
      if (dev > tol * ad_scale * ad_scale * dim_) {
        std::ostringstream os;
        os << "LieAlgebra::validate: Jacobi identity violated at basis pair (" << i
           << "," << j << ") by " << dev;
        throw std::runtime_error(os.str());
      }
    }

  Mat trace_form(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      trace_form(i, j) = trace_form(j, i) = (ad_basis_[i] * ad_basis_[j]).trace();
  double dev = (killing_ - killing_scale_ * trace_form).cwiseAbs().maxCoeff();
  double kscale = std::max(1.0, killing_.cwiseAbs().maxCoeff());
  if (dev > tol * kscale)
    throw std::runtime_error(
        "LieAlgebra::validate: killing_matrix is not killing_scale * trace form");

  Eigen::SelfAdjointEigenSolver<Mat> es(killing_);
  double emax = es.eigenvalues().cwiseAbs().maxCoeff();
  double emin = es.eigenvalues().cwiseAbs().minCoeff();
  if (!(emin > 1e-10 * emax))
    throw std::runtime_error(
        "LieAlgebra::validate: Killing form is degenerate (algebra not semisimple?)");
}

KillingFrame orthonormalize(const LieAlgebra& g, double c,
                            const std::vector<Vec>& candidates, int target_dim) {
  if (c == 0.0) throw std::invalid_argument("orthonormalize: c must be nonzero");
  if (target_dim < 0 || target_dim > g.dim())
    throw std::invalid_argument("orthonormalize: bad target dimension");

  const Mat form = c * g.killing_matrix();
  auto B = [&form](const Vec& x, const Vec& y) { return x.dot(form * y); };
  const double form_scale = form.cwiseAbs().maxCoeff();

  double in_scale = 0.0;
  for (const Vec& v : candidates) in_scale = std::max(in_scale, v.cwiseAbs().maxCoeff());
  if (in_scale == 0.0) in_scale = 1.0;
  const double drop_tol = 1e-12 * in_scale;
  // |B(v,v)| below this fraction of the generic scale counts as null.
  auto is_null = [&](const Vec& v, double bvv) {
    return std::abs(bvv) <= 1e-8 * form_scale * v.squaredNorm();
  };

  KillingFrame frame;
  std::vector<Vec> pool = candidates;

  auto project_out_accepted = [&](Vec v) {
    for (size_t a = 0; a < frame.vectors.size(); ++a)
      v -= frame.sign[a] * B(frame.vectors[a], v) * frame.vectors[a];
    return v;
  };

  auto accept = [&](Vec v, double bvv) {
    int sign = bvv > 0.0 ? 1 : -1;
    v /= std::sqrt(std::abs(bvv));
    double amax = v.cwiseAbs().maxCoeff();
    for (int i = 0; i < v.size(); ++i) {
      if (std::abs(v[i]) > 1e-8 * amax) {
        if (v[i] < 0.0) v = -v;
        break;
      }
    }
    frame.vectors.push_back(std::move(v));
    frame.sign.push_back(sign);
  };

  while (static_cast<int>(frame.vectors.size()) < target_dim) {
    std::vector<Vec> fresh;
    fresh.reserve(pool.size());
    for (const Vec& cand : pool) {
      Vec v = project_out_accepted(cand);
      if (v.cwiseAbs().maxCoeff() > drop_tol) fresh.push_back(std::move(v));
    }
    pool = std::move(fresh);
    if (pool.empty())
      throw std::runtime_error(
          "orthonormalize: candidates exhausted before reaching target dimension");

    std::vector<double> bvv(pool.size());
    size_t pivot = 0;
    for (size_t i = 0; i < pool.size(); ++i) {
      bvv[i] = B(pool[i], pool[i]);
      if (std::abs(bvv[i]) > std::abs(bvv[pivot])) pivot = i;
    }

    if (!is_null(pool[pivot], bvv[pivot])) {
      accept(pool[pivot], bvv[pivot]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pivot));
      continue;
    }

    // Every remaining candidate is null; mix the first with its strongest partner.
    if (pool.size() < 2)
      throw std::runtime_error(
          "orthonormalize: form is degenerate on the remaining subspace");
    const Vec& v0 = pool.front();
    size_t mate = 1;
    double best = 0.0;
    for (size_t i = 1; i < pool.size(); ++i) {
      double p = std::abs(B(v0, pool[i]));
      if (p > best) {
        best = p;
        mate = i;
      }
    }
    if (best <= 1e-10 * form_scale * v0.norm() * pool[mate].norm())
      throw std::runtime_error(
          "orthonormalize: form is degenerate on the remaining subspace");
    double t = v0.cwiseAbs().maxCoeff() / pool[mate].cwiseAbs().maxCoeff();
    double s = B(v0, pool[mate]) > 0.0 ? 1.0 : -1.0;
    Vec w = v0 + s * t * pool[mate];
    double bww = B(w, w);
    if (is_null(w, bww))
      throw std::runtime_error("orthonormalize: null-cone escape failed");
    accept(std::move(w), bww);
    pool.erase(pool.begin());
  }

  return frame;
}

KillingFrame orthonormal_basis(const LieAlgebra& g, double c) {
  std::vector<Vec> candidates;
  candidates.reserve(g.dim());
  for (int i = 0; i < g.dim(); ++i) candidates.push_back(Vec::Unit(g.dim(), i));
  return orthonormalize(g, c, candidates, g.dim());
}

namespace {

/// Expands a traceless n x n matrix in the basis {h_a} + {E_ij}; entries must be exact
/// (integer) for the partial-sum diagonal expansion to stay exact.
Vec expand_sl(const Mat& m, int n, const std::map<std::pair<int, int>, int>& root_basis,
              int dim) {
  Vec out = Vec::Zero(dim);
  double partial = 0.0;
  for (int a = 0; a < n - 1; ++a) {
    partial += m(a, a);
    out[a] = partial;
  }
  for (const auto& [root, idx] : root_basis) out[idx] = m(root.first, root.second);
  return out;
}

}  // namespace

SlAlgebra build_sl(int n, double alpha_sq) {
  if (n < 2) throw std::invalid_argument("build_sl: need n >= 2");
  if (!(alpha_sq > 0.0)) throw std::invalid_argument("build_sl: alpha_sq must be positive");

  const int dim = n * n - 1;

  // Basis: simple coroots h_1..h_{n-1}, then E_ij for the positive roots (i < j)
  // ordered by height j - i then by i, then the negative roots in the same order.
  std::vector<std::string> labels;
  std::vector<Mat> defining;
  std::map<std::pair<int, int>, int> root_basis;
  for (int a = 0; a < n - 1; ++a) {
    labels.push_back("h" + std::to_string(a + 1));
    Mat m = Mat::Zero(n, n);
    m(a, a) = 1.0;
    m(a + 1, a + 1) = -1.0;
    defining.push_back(m);
  }
  auto add_roots = [&](int sign) {
    for (int height = 1; height < n; ++height)
      for (int i = 0; i + height < n; ++i) {
        int j = i + height;
        int row = sign > 0 ? i : j;
        int col = sign > 0 ? j : i;
        root_basis[{row, col}] = static_cast<int>(labels.size());
        labels.push_back("E(" + std::to_string(row + 1) + "," + std::to_string(col + 1) +
                         ")");
        Mat m = Mat::Zero(n, n);
        m(row, col) = 1.0;
        defining.push_back(m);
      }
  };
  add_roots(+1);
  add_roots(-1);

  std::vector<Mat> structure(dim, Mat::Zero(dim, dim));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      Mat comm = defining[i] * defining[j] - defining[j] * defining[i];
      Vec coeff = expand_sl(comm, n, root_basis, dim);
      for (int k = 0; k < dim; ++k) {
        structure[k](i, j) = coeff[k];
        structure[k](j, i) = -coeff[k];
      }
    }

  // killing = (2/alpha_sq) * tr_def(x y) = [1/(n*alpha_sq)] * tr(ad_x ad_y).
  SlAlgebra out{LieAlgebra(std::move(labels), std::move(structure), 1.0 / (n * alpha_sq)),
                Grading{}, SlHandles{}};

  out.handles.n = n;
  out.handles.alpha_sq = alpha_sq;
  out.handles.root_basis = root_basis;
  for (int a = 0; a < n - 1; ++a) {
    out.handles.h.push_back(Vec::Unit(dim, a));
    out.handles.e_plus.push_back(Vec::Unit(dim, root_basis.at({a, a + 1})));
    out.handles.e_minus.push_back(Vec::Unit(dim, root_basis.at({a + 1, a})));
  }
  // Killing-orthonormal Cartan directions by plain Gram-Schmidt on the coroots
  // (the Killing form is positive definite there).
  for (int a = 0; a < n - 1; ++a) {
    Vec v = out.handles.h[a];
    for (const Vec& prev : out.handles.cartan)
      v -= out.algebra.killing(prev, v) * prev;
    v /= std::sqrt(out.algebra.killing(v, v));
    out.handles.cartan.push_back(std::move(v));
  }

  // Principal grading: Q acts on E_ij with eigenvalue j - i; Q = sum_a a(n-a)/2 h_a.
  Grading& gr = out.grading;
  gr.Q = Vec::Zero(dim);
  for (int a = 1; a <= n - 1; ++a) gr.Q[a - 1] = 0.5 * a * (n - a);
  gr.grade.assign(dim, 0);
  for (const auto& [root, idx] : root_basis) gr.grade[idx] = root.second - root.first;
  for (int i = 0; i < dim; ++i) gr.subspace[gr.grade[i]].push_back(i);

  return out;
}

}  // namespace todasurf
