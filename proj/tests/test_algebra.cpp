#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "property_suites.hpp"
#include "todasurf/algebra.hpp"

using namespace todasurf;

namespace {
doctest::Approx near(double v, double eps = 1e-12) {
  return doctest::Approx(v).epsilon(eps).scale(1.0);
}
}  // namespace

TEST_CASE("sl(2) Chevalley relations and Killing values") {
  for (double alpha_sq : {2.0, 3.7}) {
    CAPTURE(alpha_sq);
    auto sl2 = build_sl(2, alpha_sq);
    sl2.algebra.validate();
    const LieAlgebra& g = sl2.algebra;
    REQUIRE(g.dim() == 3);

    Vec h = sl2.handles.h[0];
    Vec e = sl2.handles.e_plus[0];
    Vec f = sl2.handles.e_minus[0];

    CHECK((g.bracket(h, e) - 2.0 * e).cwiseAbs().maxCoeff() == near(0.0));
    CHECK((g.bracket(h, f) + 2.0 * f).cwiseAbs().maxCoeff() == near(0.0));
    CHECK((g.bracket(e, f) - h).cwiseAbs().maxCoeff() == near(0.0));

    CHECK(g.killing(h, h) == near(4.0 / alpha_sq));
    CHECK(g.killing(e, f) == near(2.0 / alpha_sq));
    CHECK(g.killing(e, e) == near(0.0));
    CHECK(g.killing(h, e) == near(0.0));

    // H = (alpha/2) h is the unit-norm Cartan direction.
    Vec H = sl2.handles.cartan[0];
    CHECK(g.killing(H, H) == near(1.0));
    CHECK((H - 0.5 * std::sqrt(alpha_sq) * h).cwiseAbs().maxCoeff() == near(0.0));
  }
}

TEST_CASE("killing matrix is the declared multiple of the ad trace form") {
  for (int n : {2, 3}) {
    auto sl = build_sl(n, 2.0);
    const LieAlgebra& g = sl.algebra;
    Mat trace_form(g.dim(), g.dim());
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j)
        trace_form(i, j) = (g.ad_basis(i) * g.ad_basis(j)).trace();
    double dev =
        (g.killing_matrix() - g.killing_scale() * trace_form).cwiseAbs().maxCoeff();
    CHECK(dev < 1e-12);
    CHECK(g.killing_scale() == near(1.0 / (n * 2.0)));
  }
}

TEST_CASE("principal grading of sl(2) and sl(3)") {
  auto sl2 = build_sl(2);
  auto sl3 = build_sl(3);

  CHECK(props::grading_eigen_max_dev(sl2.algebra, sl2.grading) < 1e-14);
  CHECK(props::grading_eigen_max_dev(sl3.algebra, sl3.grading) < 1e-14);
  CHECK(props::grading_orthogonality_max_dev(sl2.algebra, sl2.grading) < 1e-14);
  CHECK(props::grading_orthogonality_max_dev(sl3.algebra, sl3.grading) < 1e-14);

  CHECK(sl2.grading.max_grade() == 1);
  CHECK(sl3.grading.max_grade() == 2);
  CHECK(sl3.grading.subspace.at(0).size() == 2);
  CHECK(sl3.grading.subspace.at(1).size() == 2);
  CHECK(sl3.grading.subspace.at(-1).size() == 2);
  CHECK(sl3.grading.subspace.at(2).size() == 1);
  CHECK(sl3.grading.subspace.at(-2).size() == 1);

  // Q is a zero-grade element built from the coroots.
  for (int idx : sl3.grading.subspace.at(0)) CHECK(idx < 2);
}

TEST_CASE("adjoint exponential matches the power series") {
  auto sl3 = build_sl(3, 2.0);
  const LieAlgebra& g = sl3.algebra;
  std::mt19937 gen(20260822);
  for (int t = 0; t < 20; ++t) {
    Vec x = props::random_element(g.dim(), gen, 0.4);
    Mat a = g.ad(x);
    Mat series = Mat::Identity(g.dim(), g.dim());
    Mat term = Mat::Identity(g.dim(), g.dim());
    for (int k = 1; k <= 40; ++k) {
      term = term * a / static_cast<double>(k);
      series += term;
    }
    CHECK((g.ad_exp(x) - series).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Cartan conjugation scales root vectors by exponentiated weights") {
  auto sl3 = build_sl(3, 2.0);
  const LieAlgebra& g = sl3.algebra;
  double p1 = 0.37, p2 = -0.21;
  Vec cart = p1 * sl3.handles.h[0] + p2 * sl3.handles.h[1];

  struct Case {
    Vec v;
    double weight;
  };
  std::vector<Case> cases = {
      {sl3.handles.e_minus[0], -2.0 * p1 + p2},  // E_{-alpha_1}
      {sl3.handles.e_minus[1], p1 - 2.0 * p2},   // E_{-alpha_2}
      {sl3.handles.e_plus[0], 2.0 * p1 - p2},
      {sl3.handles.e_plus[1], -p1 + 2.0 * p2},
  };
  for (const auto& cse : cases) {
    Vec got = g.ad_exp_apply(cart, cse.v);
    CHECK((got - std::exp(cse.weight) * cse.v).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("orthonormal basis of sl(2) reproduces the closed-form frame") {
  for (double alpha_sq : {2.0, 3.7}) {
    CAPTURE(alpha_sq);
    auto sl2 = build_sl(2, alpha_sq);
    const LieAlgebra& g = sl2.algebra;
    double al = std::sqrt(alpha_sq);

    KillingFrame frame = orthonormal_basis(g, 1.0);
    REQUIRE(frame.vectors.size() == 3);
    CHECK(frame.sign[0] == 1);
    CHECK(frame.sign[1] == 1);
    CHECK(frame.sign[2] == -1);
    CHECK(frame.negative_count() == 1);

    Vec h = sl2.handles.h[0], e = sl2.handles.e_plus[0], f = sl2.handles.e_minus[0];
    CHECK((frame.vectors[0] - 0.5 * al * h).cwiseAbs().maxCoeff() == near(0.0));
    CHECK((frame.vectors[1] - 0.5 * al * (e + f)).cwiseAbs().maxCoeff() == near(0.0));
    CHECK((frame.vectors[2] - 0.5 * al * (e - f)).cwiseAbs().maxCoeff() == near(0.0));

    // Orthonormality w.r.t. c*k and flip of the index under c -> -c.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double want = (i == j) ? frame.sign[i] : 0.0;
        CHECK(g.killing(frame.vectors[i], frame.vectors[j]) == near(want));
      }
    CHECK(orthonormal_basis(g, -1.0).negative_count() == 2);
  }
}

TEST_CASE("index of the scaled Killing form matches the eigenvalue count") {
  for (int n : {2, 3}) {
    auto sl = build_sl(n, 2.0);
    for (double c : {1.0, -1.0}) {
      CAPTURE(n);
      CAPTURE(c);
      KillingFrame frame = orthonormal_basis(sl.algebra, c);
      CHECK(frame.negative_count() ==
            props::killing_negative_eigenvalues(sl.algebra, c));
      for (size_t i = 0; i < frame.vectors.size(); ++i)
        for (size_t j = 0; j < frame.vectors.size(); ++j) {
          double want = (i == j) ? frame.sign[i] : 0.0;
          CHECK(c * sl.algebra.killing(frame.vectors[i], frame.vectors[j]) ==
                near(want));
        }
    }
  }
  CHECK(props::killing_negative_eigenvalues(build_sl(2).algebra, 1.0) == 1);
  CHECK(props::killing_negative_eigenvalues(build_sl(3).algebra, 1.0) == 3);
}

TEST_CASE("element recovery from adjoint matrices") {
  auto sl3 = build_sl(3, 2.0);
  const LieAlgebra& g = sl3.algebra;
  std::mt19937 gen(7);
  for (int t = 0; t < 20; ++t) {
    Vec x = props::random_element(g.dim(), gen);
    double res = -1.0;
    Vec back = g.element_from_ad(g.ad(x), &res);
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(res < 1e-11);
  }
  // A matrix outside the ad image reports a visible residual.
  double res = 0.0;
  Mat off = Mat::Identity(g.dim(), g.dim());
  g.element_from_ad(off, &res);
  CHECK(res > 1.0);
}

TEST_CASE("algebraic identities hold on randomized inputs") {
  for (int n : {2, 3}) {
    CAPTURE(n);
    auto sl = build_sl(n, 2.0);
    CHECK(props::jacobi_max_dev(sl.algebra, 100, 42) < 1e-10);
    CHECK(props::killing_invariance_max_dev(sl.algebra, 100, 43) < 1e-10);
  }
}

TEST_CASE("validate rejects tampered structure constants") {
  auto sl2 = build_sl(2);
  std::vector<Mat> structure(3);
  for (int k = 0; k < 3; ++k) {
    structure[k].resize(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        structure[k](i, j) = sl2.algebra.structure_constant(k, i, j);
  }
  // [h, E] = 2.5 E while [h, F] stays -2 F genuinely breaks Jacobi (a uniform
  // rescaling of [E, F] alone would only produce an isomorphic algebra).
  structure[1](0, 1) += 0.5;
  structure[1](1, 0) -= 0.5;
  LieAlgebra bad({"h1", "E(1,2)", "E(2,1)"}, structure, sl2.algebra.killing_scale());
  CHECK_THROWS_AS(bad.validate(), std::runtime_error);
}

TEST_CASE("input validation") {
  auto sl2 = build_sl(2);
  CHECK_THROWS_AS(sl2.algebra.bracket(Vec::Zero(4), Vec::Zero(3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sl2.algebra.killing(Vec::Zero(3), Vec::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sl2.algebra.label_index("nope"), std::invalid_argument);
  CHECK(sl2.algebra.label_index("E(2,1)") == 2);
  CHECK_THROWS_AS(build_sl(1), std::invalid_argument);
  CHECK_THROWS_AS(build_sl(3, -1.0), std::invalid_argument);
}

TEST_CASE("sl(4) extension builds and validates") {
  auto sl4 = build_sl(4, 2.0);
  CHECK(sl4.algebra.dim() == 15);
  sl4.algebra.validate();
  CHECK(sl4.grading.max_grade() == 3);
  CHECK(props::grading_eigen_max_dev(sl4.algebra, sl4.grading) < 1e-13);
}
