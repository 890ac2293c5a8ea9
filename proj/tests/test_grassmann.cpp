#include <doctest.h>

#include <cmath>
#include <random>

#include "kpos/grassmann.hpp"
#include "test_util.hpp"

using namespace kpos;
using kpos::testing::random_matrix;
using kpos::testing::random_proximal;
using kpos::testing::random_subspace;
using kpos::testing::rel_err;

namespace {

Subspace vec_span(std::initializer_list<std::initializer_list<double>> cols) {
  const int d = static_cast<int>(cols.begin()->size());
  Matrix m(d, static_cast<Eigen::Index>(cols.size()));
  int c = 0;
  for (const auto& col : cols) {
    int r = 0;
    for (double x : col) m(r++, c) = x;
    ++c;
  }
  return Subspace::from_independent(m);
}

Subspace image(const Matrix& g, const Subspace& v) { return Subspace::from_independent(g * v.basis()); }

// The four-determinant formula written out against raw bases, independent of
// the library's sign/log bookkeeping.
double four_det_oracle(const Subspace& v1, const Subspace& w2, const Subspace& w3, const Subspace& v4) {
  auto det = [](const Subspace& a, const Subspace& b) {
    Matrix m(a.ambient_dim(), a.dim() + b.dim());
    m << a.basis(), b.basis();
    return m.determinant();
  };
  return det(v1, w3) * det(v4, w2) / (det(v1, w2) * det(v4, w3));
}

}  // namespace

TEST_CASE("transverse") {
  CHECK(transverse(Subspace::coordinate(3, {1}), Subspace::coordinate(3, {2, 3})));
  CHECK_FALSE(transverse(Subspace::coordinate(3, {1}), Subspace::coordinate(3, {1, 2})));
  Vector far(4);
  far << 1, 1e6, 0, 0;
  CHECK_FALSE(transverse(Subspace::coordinate(4, {2}), Subspace::coordinate(4, {2, 3, 4})));
  CHECK(transverse(Subspace::from_independent(far), Subspace::coordinate(4, {2, 3, 4})));
  CHECK(transversality_margin(Subspace::from_independent(far), Subspace::coordinate(4, {2, 3, 4})) < 1e-6);
  CHECK_THROWS_AS(transverse(Subspace::coordinate(3, {1}), Subspace::coordinate(3, {2})), Error);
}

TEST_CASE("meet") {
  const Subspace m = meet(Subspace::coordinate(3, {1, 2}), Subspace::coordinate(3, {2, 3}));
  CHECK(m.dim() == 1);
  CHECK(m.containment_residual(Subspace::coordinate(3, {2})) < 1e-12);
  CHECK(meet(Subspace::coordinate(3, {1, 2}), Subspace::coordinate(3, {3})).dim() == 0);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 3 + trial % 5;
    const int k = 1 + trial % (d - 1);
    const Subspace a = random_subspace(rng, d, k);
    const Subspace b = random_subspace(rng, d, d - k + 1);
    const Subspace c = meet(a, b);
    REQUIRE(c.dim() == 1);
    CHECK(c.containment_residual(a) < 1e-10);
    CHECK(c.containment_residual(b) < 1e-10);
  }
}

TEST_CASE("sum_direct") {
  CHECK(sum_direct({Subspace::coordinate(3, {1}), Subspace::coordinate(3, {2}), Subspace::coordinate(3, {3})}));
  CHECK_FALSE(sum_direct({Subspace::coordinate(3, {1}), vec_span({{3, 3, 0}}), Subspace::coordinate(3, {2})}));
  try {
    sum_direct({Subspace::coordinate(3, {1, 2}), Subspace::coordinate(3, {2, 3})});
    FAIL("expected DimOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimOverflow);
  }
}

TEST_CASE("wedge_vol") {
  CHECK(wedge_vol(Subspace::coordinate(2, {1}), Subspace::coordinate(2, {2})) == doctest::Approx(1.0));
  CHECK(wedge_vol(Subspace::coordinate(2, {1}), Subspace::coordinate(2, {1})) == doctest::Approx(0.0));
  // Unit bases of the lines (1,-1) and (1,1); the raw vectors give 2.
  const double v = wedge_vol(vec_span({{1, -1}}), vec_span({{1, 1}}));
  CHECK(std::abs(v) * std::sqrt(2.0) * std::sqrt(2.0) == doctest::Approx(2.0));
}

TEST_CASE("cross_ratio_k examples") {
  const auto e1 = Subspace::coordinate(2, {1});
  const auto e2 = Subspace::coordinate(2, {2});
  const auto p = vec_span({{1, 1}});
  const auto m = vec_span({{1, -1}});
  CHECK(cross_ratio_k(e1, e2, p, m).value() == doctest::Approx(0.5));
  CHECK(cross_ratio_k(e1, p, p, m).value() == doctest::Approx(1.0));

  Matrix g(2, 2);
  g << 2, 0, 0, 0.5;
  const Subspace gw = image(g, p);
  CHECK(cross_ratio_k(e2, p, gw, e1).value() == doctest::Approx(4.0));
  CHECK(cr_period_expected(eig_sorted(g), 1) == doctest::Approx(4.0));
}

TEST_CASE("cross ratio zero, infinity and domain") {
  std::mt19937_64 rng(22);
  const int d = 4, k = 2;
  const Subspace v1 = random_subspace(rng, d, k);
  const Subspace v4 = random_subspace(rng, d, k);
  const Subspace w2 = random_subspace(rng, d, d - k);
  // w3 meets v1 in a line.
  Matrix w3b(d, d - k);
  w3b.col(0) = v1.basis().col(0);
  w3b.col(1) = random_matrix(rng, d, 1);
  const Subspace w3 = Subspace::from_independent(w3b);
  const CrossRatio z = cross_ratio_k(v1, w2, w3, v4);
  CHECK(z.zero);
  CHECK(z.value() == 0.0);
  const CrossRatio inf = cross_ratio_k(v1, w3, w2, v4);
  CHECK(inf.infinite);
  // Both patterns broken: outside the domain.
  Matrix w2b(d, d - k);
  w2b.col(0) = v4.basis().col(0);
  w2b.col(1) = v1.basis().col(1);
  const Subspace w2bad = Subspace::from_independent(w2b);
  try {
    cross_ratio_k(v1, w2bad, w3, v4);
    FAIL("expected NotInDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInDomain);
  }
}

TEST_CASE("cross ratio matches the four-determinant oracle and is basis free") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 3 + trial % 4;
    const int k = 1 + trial % (d - 1);
    const Subspace v1 = random_subspace(rng, d, k), v4 = random_subspace(rng, d, k);
    const Subspace w2 = random_subspace(rng, d, d - k), w3 = random_subspace(rng, d, d - k);
    const double want = four_det_oracle(v1, w2, w3, v4);
    const double got = cross_ratio_k(v1, w2, w3, v4).value();
    CHECK(rel_err(got, want) < 1e-9);
    // Change of bases inside each subspace.
    const Subspace v1b = Subspace::from_independent(v1.basis() * (random_matrix(rng, k, k) + 3.0 * Matrix::Identity(k, k)));
    CHECK(rel_err(cross_ratio_k(v1b, w2, w3, v4).value(), want) < 1e-9);
  }
}

TEST_CASE("cross ratio symmetry, cocycle identities, PGL invariance") {
  std::mt19937_64 rng(24);
  const TolerancePolicy tol;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 3 + trial % 4;
    const int k = 1 + trial % (d - 1);
    const Subspace v1 = random_subspace(rng, d, k), v4 = random_subspace(rng, d, k), v5 = random_subspace(rng, d, k);
    const Subspace w2 = random_subspace(rng, d, d - k), w3 = random_subspace(rng, d, d - k),
                   w5 = random_subspace(rng, d, d - k);
    const double c = cross_ratio_k(v1, w2, w3, v4).value();
    CHECK(rel_err(1.0 / c, cross_ratio_k(v4, w2, w3, v1).value()) < tol.cr_rel_tol);
    CHECK(rel_err(1.0 / c, cross_ratio_k(v1, w3, w2, v4).value()) < tol.cr_rel_tol);
    CHECK(rel_err(c * cross_ratio_k(v4, w2, w3, v5).value(), cross_ratio_k(v1, w2, w3, v5).value()) < tol.cr_rel_tol);
    CHECK(rel_err(c * cross_ratio_k(v1, w3, w5, v4).value(), cross_ratio_k(v1, w2, w5, v4).value()) < tol.cr_rel_tol);
    const Matrix g = random_matrix(rng, d, d) + 2.0 * Matrix::Identity(d, d);
    CHECK(rel_err(cross_ratio_k(image(g, v1), image(g, w2), image(g, w3), image(g, v4)).value(), c) < tol.cr_rel_tol);
  }
}

TEST_CASE("cross ratio of a period equals the eigenvalue quotient") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + trial % 5;
    const int k = 1 + trial % (d - 1);
    const Matrix g = random_proximal(rng, d);
    const Spectrum s = eig_sorted(g);
    const Subspace plus = invariant_subspace_top(g, k);
    const Subspace minus = invariant_subspace_top(g.inverse(), k);
    const Subspace w = random_subspace(rng, d, d - k);
    const double cr = cross_ratio_k(minus, w, image(g, w), plus).value();
    CHECK(rel_err(std::abs(cr), cr_period_expected(s, k)) < 1e-6);
  }
  Vector dd(3);
  dd << 4, 2, 1;
  const Spectrum s = eig_sorted(Matrix(dd.asDiagonal()));
  CHECK(cr_period_expected(s, 1) == doctest::Approx(4.0));
  CHECK(cr_period_expected(s, 2) == doctest::Approx(4.0));
  Matrix j(2, 2);
  j << 1, 1, 0, 1;
  CHECK_THROWS_AS(cr_period_expected(eig_sorted(j), 1), Error);
}

TEST_CASE("quotient pushforward") {
  const QuotientMap q = quotient(Subspace::coordinate(3, {3}));
  CHECK(q.target_dim() == 2);
  CHECK(q.push(Subspace::coordinate(3, {1})).dim() == 1);
  CHECK(q.push(Subspace::coordinate(3, {3})).dim() == 0);
  CHECK(q.push(Subspace::coordinate(3, {1, 3})).dim() == 1);
}

TEST_CASE("cross ratio through a projection to a plane") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 4 + trial % 3;
    const int k = 2 + trial % (d - 2);
    if (k >= d) continue;
    // P and Q share a (k-1)-plane R.
    const Matrix r = random_matrix(rng, d, k - 1);
    Matrix pb(d, k), qb(d, k);
    pb << r, random_matrix(rng, d, 1);
    qb << r, random_matrix(rng, d, 1);
    const Subspace p = Subspace::from_independent(pb), q = Subspace::from_independent(qb);
    const Subspace s = random_subspace(rng, d, d - k), t = random_subspace(rng, d, d - k);
    const Subspace rr = meet(p, q);
    REQUIRE(rr.dim() == k - 1);
    const Subspace x = join({p, q});
    const QuotientMap quo = quotient(rr);
    const Subspace pl = quo.push(p), ql = quo.push(q);
    const Subspace sl = quo.push(meet(s, x)), tl = quo.push(meet(t, x));
    const Subspace plane = join({pl, ql});
    auto coords = [&](const Subspace& v) { return Subspace::from_independent(plane.basis().transpose() * v.basis()); };
    const double pcr = cross_ratio_k(coords(pl), coords(sl), coords(tl), coords(ql)).value();
    CHECK(rel_err(cross_ratio_k(p, s, t, q).value(), pcr) < 1e-8);
  }
}

TEST_CASE("exterior powers") {
  Vector dv(3);
  dv << 2, 3, 5;
  const Matrix w = ext_power_matrix(Matrix(dv.asDiagonal()), 2);
  CHECK(w(0, 0) == doctest::Approx(6.0));
  CHECK(w(1, 1) == doctest::Approx(10.0));
  CHECK(w(2, 2) == doctest::Approx(15.0));
  CHECK((ext_power_matrix(Matrix::Identity(5, 5), 3) - Matrix::Identity(10, 10)).norm() < 1e-14);

  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 3 + trial % 4;
    const int k = 1 + trial % (d - 1);
    const Matrix a = random_matrix(rng, d, d), b = random_matrix(rng, d, d);
    const Matrix lhs = ext_power_matrix(a * b, k);
    CHECK((lhs - ext_power_matrix(a, k) * ext_power_matrix(b, k)).norm() < 1e-9 * (1.0 + lhs.norm()));

    const Matrix g = random_proximal(rng, d);
    const Spectrum s = eig_sorted(g);
    const Spectrum ws = eig_sorted(ext_power_matrix(g, k));
    CHECK(rel_err(gap_ratio(ws, 1), gap_ratio(s, k)) < 1e-8);

    // Plucker compatibility: transversality is the pairing of wedge vectors.
    const Subspace v = random_subspace(rng, d, k);
    const Subspace u = random_subspace(rng, d, d - k);
    const Vector pv = plucker_vector(v), pu = plucker_vector(u);
    const auto rows = lex_subsets(d, k), cols = lex_subsets(d, d - k);
    double pairing = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      std::vector<int> rest;
      for (int c = 1; c <= d; ++c)
        if (std::find(rows[i].begin(), rows[i].end(), c) == rows[i].end()) rest.push_back(c);
      const size_t j = static_cast<size_t>(std::find(cols.begin(), cols.end(), rest) - cols.begin());
      Matrix perm = Matrix::Zero(d, d);
      for (int c = 0; c < k; ++c) perm(rows[i][c] - 1, c) = 1.0;
      for (int c = 0; c < d - k; ++c) perm(rest[c] - 1, k + c) = 1.0;
      pairing += perm.determinant() * pv(static_cast<Eigen::Index>(i)) * pu(static_cast<Eigen::Index>(j));
    }
    CHECK(std::abs(pairing - wedge_vol(v, u)) < 1e-10);
    CHECK(ext_power_subspace(v).dim() == 1);
  }
}
