#include <doctest.h>

#include <cmath>
#include <random>

#include "kpos/grassmann.hpp"
#include "kpos/numlin.hpp"
#include "test_util.hpp"

using namespace kpos;
using kpos::testing::random_matrix;
using kpos::testing::random_proximal;

namespace {

Matrix family_matrix(double lambda, double n) {
  const double eps = -n / (lambda * (n * n * lambda + 1.0));
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = lambda + 1.0 / (n * n);
  m(1, 0) = 1.0 / n;
  m(1, 1) = lambda;
  m(2, 2) = 1.0 / lambda;
  m(2, 3) = eps;
  m(3, 3) = 1.0 / (lambda + 1.0 / (n * n));
  return m;
}

Matrix diag(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x(i++) = a;
  return x.asDiagonal();
}

}  // namespace

TEST_CASE("eig_sorted orders by modulus") {
  const Spectrum s = eig_sorted(diag({0.5, 2.0, 1.0}));
  REQUIRE(s.dim() == 3);
  CHECK(s.modulus(1) == doctest::Approx(2.0));
  CHECK(s.modulus(2) == doctest::Approx(1.0));
  CHECK(s.modulus(3) == doctest::Approx(0.5));

  const Spectrum f = eig_sorted(family_matrix(2.0, 1.0));
  CHECK(f.modulus(1) == doctest::Approx(3.0));
  CHECK(f.modulus(2) == doctest::Approx(2.0));
  CHECK(f.modulus(3) == doctest::Approx(0.5));
  CHECK(f.modulus(4) == doctest::Approx(1.0 / 3.0));

  Matrix j(2, 2);
  j << 1, 1, 0, 1;
  const Spectrum u = eig_sorted(j);
  CHECK(u.modulus(1) == doctest::Approx(1.0));
  CHECK(u.modulus(2) == doctest::Approx(1.0));
}

TEST_CASE("eig_sorted rejects singular input and pairs complex values") {
  CHECK_THROWS_AS(eig_sorted(diag({1.0, 0.0, 2.0})), Error);
  Matrix r(3, 3);
  r << 0, -2, 0, 2, 0, 0, 0, 0, 0.5;
  const Spectrum s = eig_sorted(r);
  CHECK(s.values[0] == std::conj(s.values[1]));
  CHECK(s.modulus(1) == doctest::Approx(2.0));
}

TEST_CASE("gap_ratio") {
  CHECK(gap_ratio(eig_sorted(diag({4, 2, 1})), 1) == doctest::Approx(2.0));
  CHECK(gap_ratio(eig_sorted(family_matrix(2.0, 1.0)), 2) == doctest::Approx(4.0));
  Matrix j(2, 2);
  j << 1, 1, 0, 1;
  CHECK(gap_ratio(eig_sorted(j), 1) == doctest::Approx(1.0));
  CHECK_FALSE(has_gap(eig_sorted(j), 1));
  try {
    gap_ratio(eig_sorted(j), 2);
    FAIL("expected IndexOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfRange);
  }
}

TEST_CASE("invariant_subspace_top on explicit matrices") {
  const Subspace top = invariant_subspace_top(diag({3, 2, 1}), 2);
  CHECK(top.containment_residual(Subspace::coordinate(3, {1, 2})) < 1e-12);

  for (double n : {1.0, 5.0, 50.0}) {
    const Matrix m = family_matrix(2.0, n);
    const Subspace line = invariant_subspace_top(m, 1);
    Vector want(4);
    want << 1, n, 0, 0;
    CHECK(line.containment_residual(Subspace::from_independent(want)) < 1e-10);
    const Subspace hyper = invariant_subspace_top(m.inverse(), 3);
    CHECK(hyper.containment_residual(Subspace::coordinate(4, {2, 3, 4})) < 1e-10);
  }

  Matrix j(2, 2);
  j << 1, 1, 0, 1;
  try {
    invariant_subspace_top(j, 1);
    FAIL("expected NoGap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoGap);
  }
}

TEST_CASE("rank_tol") {
  CHECK(rank_tol(Matrix::Identity(3, 3)) == 3);
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = a(0, 1) = 1.0;
  CHECK(rank_tol(a) == 1);
  a(1, 1) = 1e-15;
  CHECK(singular_values(a)(1) / singular_values(a)(0) < 1e-9);
  CHECK(rank_tol(a) == 1);
  CHECK(rank_tol(Matrix::Zero(2, 2)) == 0);
}

TEST_CASE("TolerancePolicy validation") {
  TolerancePolicy t;
  CHECK_NOTHROW(t.validate());
  t.gap_tie_tol = 0.0;
  CHECK_THROWS_AS(t.validate(), Error);
  t.gap_tie_tol = 1.0;
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("moduli product equals |det| on random matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 6;
    const Matrix m = random_matrix(rng, d, d);
    const Spectrum s = eig_sorted(m);
    double lp = 0.0;
    for (double x : s.log_moduli) lp += x;
    CHECK(std::abs(std::exp(lp) - std::abs(m.determinant())) < 1e-8 * std::abs(m.determinant()));
    for (int i = 1; i < d; ++i) CHECK(s.log_moduli[i - 1] >= s.log_moduli[i]);
  }
}

TEST_CASE("dominant subspaces are invariant and complementary") {
  std::mt19937_64 rng(12);
  int tested = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 6;
    const Matrix m = random_matrix(rng, d, d);
    const Spectrum s = eig_sorted(m);
    for (int k = 1; k < d; ++k) {
      if (gap_ratio(s, k) < 1.05) continue;
      const Subspace top = invariant_subspace_top(m, k);
      CHECK(top.dim() == k);
      const Matrix mb = m * top.basis();
      const double res = (mb - top.projector() * mb).norm() / m.norm();
      CHECK(res < 1e-8);
      const Matrix inv = m.inverse();
      const Spectrum si = eig_sorted(inv);
      if (gap_ratio(si, d - k) < 1.05) continue;
      const Subspace bottom = invariant_subspace_top(inv, d - k);
      CHECK(transverse(top, bottom));
      ++tested;
    }
  }
  CHECK(tested > 100);
}

TEST_CASE("exterior power moduli are sorted k-fold products") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 3 + trial % 4;
    const int k = 1 + trial % (d - 1);
    const Matrix m = random_matrix(rng, d, d);
    const Spectrum s = eig_sorted(m);
    std::vector<double> prods;
    for (const auto& sub : lex_subsets(d, k)) {
      double x = 0.0;
      for (int i : sub) x += s.log_moduli[i - 1];
      prods.push_back(x);
    }
    std::sort(prods.rbegin(), prods.rend());
    const Spectrum w = eig_sorted(ext_power_matrix(m, k));
    REQUIRE(w.dim() == static_cast<int>(prods.size()));
    for (size_t i = 0; i < prods.size(); ++i) CHECK(std::abs(w.log_moduli[i] - prods[i]) < 1e-8);
  }
}

TEST_CASE("chain products keep long words finite and accurate") {
  std::mt19937_64 rng(14);
  const int d = 4;
  const Matrix a = random_proximal(rng, d, 1.5);
  const Matrix ai = a.inverse();
  std::vector<const Matrix*> fwd(400, &a), inv(400, &ai);
  const ScaledMatrix p = chain_product(fwd);
  CHECK(p.mantissa.allFinite());
  CHECK(p.exp2 > 1024);
  const Spectrum one = eig_sorted(a);
  const Spectrum s = chain_spectrum(fwd, inv);
  for (int i = 0; i < d; ++i) CHECK(std::abs(s.log_moduli[i] - 400.0 * one.log_moduli[i]) < 1e-8 * 400.0 * 6.0);
  for (int k = 1; k < d; ++k) {
    const Subspace from_chain = chain_dominant_subspace(fwd, k, s);
    const Subspace direct = invariant_subspace_top(a, k);
    CHECK(from_chain.distance(direct) < 1e-9);
  }

  const Matrix b = random_matrix(rng, d, d);
  std::vector<const Matrix*> two{&a, &b};
  const ScaledMatrix ab = chain_product(two);
  CHECK((ab.value() - a * b).norm() < 1e-12 * (a * b).norm());
}

TEST_CASE("chain_eigen settles on real spectra and clusters complex pairs") {
  std::mt19937_64 rng(15);
  const Matrix a = random_proximal(rng, 5, 0.3);
  const Matrix b = random_proximal(rng, 5, 0.3);
  const Matrix ai = a.inverse(), bi = b.inverse();
  std::vector<const Matrix*> fwd{&a, &b, &a, &a, &b, &b};
  std::vector<const Matrix*> inv{&bi, &bi, &ai, &ai, &bi, &ai};
  const ChainEigen ce = chain_eigen(fwd, inv);
  Matrix p = Matrix::Identity(5, 5);
  for (const Matrix* f : fwd) p = p * *f;
  const Spectrum direct = eig_sorted(p);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(ce.spectrum.log_moduli[i] - direct.log_moduli[i]) < 1e-7);
  for (int k = 1; k < 5; ++k) {
    if (!has_gap(direct, k)) continue;
    CHECK(ce.top(k).distance(chain_dominant_subspace(fwd, k, ce.spectrum)) < 1e-9);
  }

  Matrix rot = Matrix::Zero(3, 3);
  rot << 0.6, -0.8, 0, 0.8, 0.6, 0, 0, 0, 0.25;
  rot *= 2.0;
  const Matrix roti = rot.inverse();
  std::vector<const Matrix*> rf{&rot, &rot, &rot}, ri{&roti, &roti, &roti};
  const ChainEigen cr = chain_eigen(rf, ri);
  CHECK(std::abs(cr.spectrum.log_moduli[0] - 3.0 * std::log(2.0)) < 1e-10);
  CHECK(std::abs(cr.spectrum.log_moduli[1] - 3.0 * std::log(2.0)) < 1e-10);
  CHECK(std::abs(cr.spectrum.log_moduli[2] - 3.0 * std::log(0.5)) < 1e-10);
  CHECK_FALSE(has_gap(cr.spectrum, 1));
  CHECK(cr.top(2).containment_residual(Subspace::coordinate(3, {1, 2})) < 1e-10);
  CHECK_THROWS_AS(cr.top(1), Error);
}
