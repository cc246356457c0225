#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace todasurf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Integer grading of a Lie algebra induced by a grading element Q:
/// basis vector i satisfies [Q, T_i] = grade[i] * T_i.
struct Grading {
  Vec Q;                                     ///< grading element, basis coefficients
  std::vector<int> grade;                    ///< grade of each basis vector
  std::map<int, std::vector<int>> subspace;  ///< grade -> basis indices

  int max_grade() const;
};

/// Frame orthonormal w.r.t. the scaled Killing form: c*k(v_i, v_j) = sign[i] * delta_ij.
struct KillingFrame {
  std::vector<Vec> vectors;
  std::vector<int> sign;  ///< +1 or -1 per vector

  /// Number of -1 signs (the index of the form restricted to the frame's span).
  int negative_count() const;
};

/// Finite-dimensional real Lie algebra given by structure constants over a fixed basis.
///
/// The Killing matrix is stored as killing_scale * tr(ad_i ad_j); the scale lets a
/// construction fix the physical normalization (e.g. root length) while keeping the
/// matrix proportional to the trace form, which validate() verifies.
class LieAlgebra {
 public:
  /// structure[k](i,j) is the coefficient of T_k in [T_i, T_j].
  LieAlgebra(std::vector<std::string> labels, std::vector<Mat> structure,
             double killing_scale = 1.0);

  int dim() const { return dim_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int label_index(const std::string& label) const;  ///< throws std::invalid_argument
  double killing_scale() const { return killing_scale_; }

  double structure_constant(int k, int i, int j) const { return structure_[k](i, j); }
  const Mat& ad_basis(int i) const { return ad_basis_[i]; }

  Mat ad(const Vec& x) const;
  Vec bracket(const Vec& x, const Vec& y) const;
  const Mat& killing_matrix() const { return killing_; }
  double killing(const Vec& x, const Vec& y) const;

  /// exp(ad_x) as a dim x dim matrix (scaling-and-squaring Pade).
  Mat ad_exp(const Vec& x) const;
  /// exp(ad_x) y.
  Vec ad_exp_apply(const Vec& x, const Vec& y) const;

  /// Least-squares recovery of x from M ~ ad(x). If residual is non-null it
  /// receives ||ad(x) - M||_F, which is ~0 exactly when M lies in the ad image.
  Vec element_from_ad(const Mat& M, double* residual = nullptr) const;

  /// Verifies antisymmetry, the Jacobi identity (via ad being a homomorphism),
  /// proportionality of killing_matrix() to the trace form at killing_scale(),
  /// and non-degeneracy. Throws std::runtime_error with details on failure.
  void validate(double tol = 1e-12) const;

 private:
  int dim_;
  std::vector<std::string> labels_;
  std::vector<Mat> structure_;  // per output index k
  std::vector<Mat> ad_basis_;   // per basis vector i
  Mat killing_;
  double killing_scale_;
  Mat ad_flat_;  // columns are vec(ad_basis_[i]), for element_from_ad
  std::shared_ptr<Eigen::ColPivHouseholderQR<Mat>> ad_flat_qr_;
};

/// Deterministic indefinite Gram-Schmidt w.r.t. B(x,y) = c * k(x,y).
///
/// Greedily pivots on the candidate with the largest |B(v,v)| after projecting out
/// the accepted frame; when every remaining candidate is B-null, the first one is
/// mixed with its strongest-pairing partner to escape the null cone. Accepted
/// vectors are scaled to |B(v,v)| = 1 and sign-fixed so their first significant
/// coefficient is positive. Throws std::runtime_error if the candidates do not
/// span a subspace of dimension target_dim on which B is non-degenerate.
KillingFrame orthonormalize(const LieAlgebra& g, double c,
                            const std::vector<Vec>& candidates, int target_dim);

/// Orthonormal basis of the whole algebra w.r.t. c*k; its negative_count() is the
/// index of the scaled Killing form.
KillingFrame orthonormal_basis(const LieAlgebra& g, double c);

/// Named entry points into the basis produced by build_sl.
struct SlHandles {
  int n = 0;             ///< sl(n)
  double alpha_sq = 2.;  ///< squared length of the long (= every) root
  std::vector<Vec> h;        ///< simple coroots h_1..h_{n-1}
  std::vector<Vec> cartan;   ///< Killing-orthonormal Cartan directions H_1..H_{n-1}
  std::vector<Vec> e_plus;   ///< simple-root step vectors E_{alpha_1}..
  std::vector<Vec> e_minus;  ///< E_{-alpha_1}..
  std::map<std::pair<int, int>, int> root_basis;  ///< (i,j), i != j -> basis index of E_ij
};

struct SlAlgebra {
  LieAlgebra algebra;
  Grading grading;
  SlHandles handles;
};

/// sl(n, R) in a Chevalley-style basis {h_a} + {E_ij} with integer structure
/// constants, the principal grading (grade of E_ij is j - i) and the Killing
/// form normalized so every root has squared length alpha_sq.
SlAlgebra build_sl(int n, double alpha_sq = 2.0);

}  // namespace todasurf
