#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "kpos/grassmann.hpp"
#include "kpos/positivity.hpp"
#include "test_util.hpp"

using namespace kpos;
using kpos::testing::random_matrix;

namespace {

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Symmetric power of [[a,b],[c,e]]: column i holds the coefficients of
// (a x + c y)^(d-1-i) (b x + e y)^i in the basis x^(d-1-r) y^r.
template <class T>
DenseMat<T> sym_power(int d, const T& a, const T& b, const T& c, const T& e) {
  DenseMat<T> m(d, d);
  for (int i = 0; i < d; ++i) {
    const int p = d - 1 - i;
    for (int s = 0; s <= p; ++s)
      for (int t = 0; t <= i; ++t) {
        // x-power (p-s)+(i-t), y-power s+t
        T coeff = T(static_cast<long>(binomial(p, s) * binomial(i, t)));
        for (int q = 0; q < p - s; ++q) coeff *= a;
        for (int q = 0; q < s; ++q) coeff *= c;
        for (int q = 0; q < i - t; ++q) coeff *= b;
        for (int q = 0; q < t; ++q) coeff *= e;
        m(s + t, i) += coeff;
      }
  }
  return m;
}

Matrix to_eigen(const DenseMat<double>& m) {
  Matrix out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

Matrix anti_identity(int d) {
  Matrix a = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) a(d - 1 - i, i) = 1.0;
  return a;
}

Flag standard_x(int d) { return Flag::from_frame(anti_identity(d)); }
Flag standard_z(int d) { return Flag::from_frame(Matrix::Identity(d, d)); }

// Veronese flag at the point s of the projective line (s = inf gives Z).
Flag veronese(int d, double s) {
  if (std::isinf(s)) return standard_z(d);
  const Matrix u = to_eigen(sym_power<double>(d, 1.0, s, 0.0, 1.0));
  return Flag::from_frame(u * anti_identity(d));
}

Flag image(const Matrix& g, const Flag& f) {
  std::vector<Subspace> pieces;
  for (const auto& p : f.pieces()) pieces.push_back(Subspace::from_independent(g * p.basis()));
  return Flag::from_pieces(pieces);
}

}  // namespace

TEST_CASE("nonvanishing minors for small d") {
  const auto m2 = nonvanishing_minors(2);
  REQUIRE(m2.size() == 4);
  std::set<std::pair<std::vector<int>, std::vector<int>>> got;
  for (const auto& m : m2) got.insert({m.rows, m.cols});
  CHECK(got.count({{1}, {1}}));
  CHECK(got.count({{2}, {2}}));
  CHECK(got.count({{1}, {2}}));
  CHECK(got.count({{1, 2}, {1, 2}}));
  for (int d = 2; d <= 8; ++d) {
    const auto ms = nonvanishing_minors(d);
    CHECK(std::none_of(ms.begin(), ms.end(), [](const MinorIndex& m) { return m.rows == std::vector<int>{2} && m.cols == std::vector<int>{1}; }));
  }
  CHECK(nonvanishing_minors(3).size() == 13);
  CHECK_THROWS_AS(nonvanishing_minors(9), Error);
  CHECK_THROWS_AS(nonvanishing_minors(1), Error);
}

TEST_CASE("nonvanishing minors agree with a brute-force oracle") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> num(-5, 5), den(1, 4);
  for (int d = 2; d <= 6; ++d) {
    std::vector<UnipotentQ> samples;
    for (int s = 0; s < 200; ++s) {
      DenseMat<Rational> u = DenseMat<Rational>::identity(d);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) u(i, j) = Rational(num(rng), den(rng));
      samples.push_back(UnipotentQ::from(u));
    }
    std::set<std::pair<std::vector<int>, std::vector<int>>> oracle;
    for (int k = 1; k <= d; ++k) {
      const auto subsets = lex_subsets(d, k);
      for (const auto& r : subsets)
        for (const auto& c : subsets) {
          std::vector<int> r0(r), c0(c);
          for (auto& x : r0) --x;
          for (auto& x : c0) --x;
          for (const auto& u : samples)
            if (determinant(u.u.submatrix(r0, c0)) != 0) {
              oracle.insert({r, c});
              break;
            }
        }
    }
    std::set<std::pair<std::vector<int>, std::vector<int>>> listed;
    for (const auto& m : nonvanishing_minors(d)) listed.insert({m.rows, m.cols});
    CHECK(listed == oracle);
  }
}

TEST_CASE("is_totally_positive examples") {
  const UnipotentQ id = UnipotentQ::from(DenseMat<Rational>::identity(3));
  CHECK_FALSE(is_totally_positive(id).positive());
  CHECK_FALSE(is_totally_positive(to_float(id)).positive());

  const auto t3 = sym_power<Rational>(3, 1, 1, 0, 1);
  CHECK(t3(0, 0) == 1);
  CHECK(t3(0, 1) == 1);
  CHECK(t3(0, 2) == 1);
  CHECK(t3(1, 2) == 2);
  CHECK(t3(1, 0) == 0);
  const UnipotentQ u = UnipotentQ::from(t3);
  const PositivityVerdict v = is_totally_positive(u);
  CHECK(v.positive());
  CHECK(v.min_rel_minor == doctest::Approx(1.0));

  DenseMat<Rational> f = DenseMat<Rational>::identity(2);
  f(0, 1) = -1;
  const PositivityVerdict vf = is_totally_positive(UnipotentQ::from(f));
  CHECK(vf.positive());
  REQUIRE(vf.torus.size() == 2);
  CHECK(vf.torus[0] * vf.torus[1] == -1);

  DenseMat<Rational> bad = DenseMat<Rational>::identity(3);
  bad(0, 1) = 1;
  bad(1, 2) = 1;
  bad(0, 2) = 2;  // the minor rows{1,2} cols{2,3} is 1*1 - 2*1 < 0
  const PositivityVerdict vb = is_totally_positive(UnipotentQ::from(bad));
  CHECK(vb.status == PosStatus::Negative);
  CHECK(vb.factor == 0);
  CHECK(vb.minor.rows.size() >= 1);

  DenseMat<Rational> lower = DenseMat<Rational>::identity(2);
  lower(1, 0) = 1;
  CHECK_THROWS_AS(UnipotentQ::from(lower), Error);
}

TEST_CASE("symmetric powers of positive unipotents are certified exactly") {
  for (int d = 2; d <= 6; ++d) {
    const UnipotentQ u = UnipotentQ::from(sym_power<Rational>(d, 1, 1, 0, 1));
    CHECK(is_totally_positive(u).positive());
  }
}

TEST_CASE("totally positive unipotents form a semigroup") {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> num(1, 9), den(1, 5);
  for (int d = 2; d <= 5; ++d)
    for (int trial = 0; trial < 10; ++trial) {
      const Rational s(num(rng), den(rng)), t(num(rng), den(rng));
      const auto a = sym_power<Rational>(d, 1, s, 0, 1);
      const auto b = sym_power<Rational>(d, 1, t, 0, 1);
      // Conjugating by a positive diagonal keeps positivity but leaves the
      // one-parameter family.
      DenseMat<Rational> h = DenseMat<Rational>::identity(d), hi = DenseMat<Rational>::identity(d);
      for (int i = 0; i < d; ++i) {
        h(i, i) = Rational(i + 2 + trial, 2);
        hi(i, i) = 1 / h(i, i);
      }
      const UnipotentQ p = UnipotentQ::from(h * a * hi * b);
      CHECK(is_totally_positive(p).positive());
      const UnipotentQ q = UnipotentQ::from((h * a * hi) * (hi * b * h) * a);
      CHECK(chain_totally_positive({UnipotentQ::from(a), p, q}).positive());
    }
}

TEST_CASE("float guard band yields indeterminate") {
  DenseMat<double> u = DenseMat<double>::identity(2);
  u(0, 1) = 1e-14;
  CHECK(is_totally_positive(UnipotentF{u}).status == PosStatus::Indeterminate);
  u(0, 1) = 1e-3;
  CHECK(is_totally_positive(UnipotentF{u}).positive());
}

TEST_CASE("adapted frame and unipotent factor") {
  const int d = 4;
  const Matrix g0 = adapted_frame(standard_x(d), standard_z(d));
  CHECK((g0.cwiseAbs() - Matrix::Identity(d, d)).norm() < 1e-12);
  const Matrix gs = adapted_frame(standard_z(d), standard_x(d));
  CHECK((gs.cwiseAbs() - anti_identity(d)).norm() < 1e-12);

  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const Flag x = Flag::from_frame(random_matrix(rng, d, d));
    const Flag z = Flag::from_frame(random_matrix(rng, d, d));
    const Matrix g = adapted_frame(x, z);
    const Flag gx = image(g, x), gz = image(g, z);
    for (int j = 1; j < d; ++j) {
      CHECK(gx.piece(j).containment_residual(standard_x(d).piece(j)) < 1e-9);
      CHECK(gz.piece(j).containment_residual(standard_z(d).piece(j)) < 1e-9);
    }
    const Flag f = Flag::from_frame(random_matrix(rng, d, d));
    const UnipotentF u = unipotent_factor(f, g);
    const Flag back = image(to_matrix(u), standard_x(d));
    const Flag gf = image(g, f);
    for (int j = 1; j < d; ++j) CHECK(back.piece(j).containment_residual(gf.piece(j)) < 1e-9);
  }

  const Matrix id = Matrix::Identity(d, d);
  const UnipotentF ux = unipotent_factor(standard_x(d), id);
  CHECK((to_matrix(ux) - id).norm() < 1e-12);

  Vector line(2);
  line << 1.0, 0.3;
  const Flag f2 = Flag::from_pieces({Subspace::from_independent(line)});
  const UnipotentF u2 = unipotent_factor(f2, Matrix::Identity(2, 2));
  CHECK(u2.u(0, 1) == doctest::Approx(1.0 / 0.3));

  CHECK_THROWS_AS(adapted_frame(standard_x(d), standard_x(d)), Error);
}

TEST_CASE("Veronese triples and tuples are positive") {
  for (int d = 2; d <= 6; ++d) {
    const Flag x = veronese(d, 0.0), y = veronese(d, 1.3), z = veronese(d, INFINITY);
    const PositivityVerdict v = triple_positive(x, y, z);
    CHECK(v.positive());
    const std::vector<Flag> f{x, y, z};
    std::vector<int> perm{0, 1, 2};
    do {
      CHECK(triple_positive(f[perm[0]], f[perm[1]], f[perm[2]]).positive());
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int j = 0; j <= d; ++j)
      for (int k = 0; j + k <= d; ++k) {
        const int l = d - j - k;
        std::vector<Subspace> parts;
        if (j > 0 && j < d) parts.push_back(x.piece(j));
        if (k > 0 && k < d) parts.push_back(y.piece(k));
        if (l > 0 && l < d) parts.push_back(z.piece(l));
        if (j == d || k == d || l == d) continue;
        CHECK(sum_direct(parts));
      }
  }
  const int d = 3;
  const Flag a = veronese(d, -0.7), b = veronese(d, 0.2), c = veronese(d, 1.1), e = veronese(d, 4.0);
  CHECK(tuple_positive({a, b, c, e}).positive());
  CHECK_FALSE(tuple_positive({a, c, b, e}).positive());
  CHECK(tuple_positive({a, b, e}).positive() == triple_positive(a, b, e).positive());
  CHECK_THROWS_AS(triple_positive(a, a, e), Error);
}

TEST_CASE("an off-component flag is caught in some ordering") {
  const int d = 3;
  const Flag x = veronese(d, 0.0), z = veronese(d, INFINITY);
  std::mt19937_64 rng(34);
  bool found = false;
  for (int trial = 0; trial < 200 && !found; ++trial) {
    const Flag y = Flag::from_frame(random_matrix(rng, d, d));
    try {
      const std::vector<Flag> f{x, y, z};
      std::vector<int> perm{0, 1, 2};
      do {
        if (triple_positive(f[perm[0]], f[perm[1]], f[perm[2]]).status == PosStatus::Negative) found = true;
      } while (std::next_permutation(perm.begin(), perm.end()));
    } catch (const Error&) {
    }
  }
  CHECK(found);
}

TEST_CASE("curve positivity on Veronese samples") {
  const int d = 4;
  std::vector<CurvePoint> pts;
  const double ss[] = {-3.0, -0.8, 0.0, 0.5, 2.0, 7.0};
  for (double s : ss) pts.push_back({std::atan(s) + M_PI / 2.0, veronese(d, s)});
  const CurveVerdict v = curve_positive(pts, 4);
  CHECK(v.verdict.positive());
  CHECK(v.tuples_tested == binomial(6, 3) + binomial(6, 4));

  std::vector<CurvePoint> flat;
  for (int i = 0; i < 4; ++i) flat.push_back({0.3 * i, veronese(d, 1.0)});
  CHECK_THROWS_AS(curve_positive(flat, 4), Error);

  // Swap two flags so that the samples no longer follow the curve's order.
  std::vector<CurvePoint> swapped = pts;
  std::swap(swapped[1].flag, swapped[3].flag);
  const CurveVerdict w = curve_positive(swapped, 4);
  CHECK(w.verdict.status == PosStatus::Negative);
  CHECK(w.negative > 0);
  CHECK(w.tuple.size() >= 3);

  const CurveVerdict capped = curve_positive(pts, 4, 7, 5);
  CHECK(capped.tuples_tested == 7);
}

TEST_CASE("pushing a positive curve to a quotient keeps it positive") {
  const int d = 5;
  const int j = 2;
  const double base = -1.5;
  const Flag x = veronese(d, base);
  const QuotientMap q = quotient(x.piece(j));
  std::vector<CurvePoint> pts;
  const double ss[] = {-0.4, 0.1, 0.9, 2.5, 6.0};
  for (double s : ss) {
    const Flag y = veronese(d, s);
    std::vector<Subspace> pieces;
    for (int i = 1; i < d - j; ++i) pieces.push_back(q.push(y.piece(i)));
    pts.push_back({std::atan(s) - std::atan(base), Flag::from_pieces(pieces)});
  }
  CHECK(curve_positive(pts, 4).verdict.positive());
}
