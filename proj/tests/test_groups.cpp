#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "kpos/groups.hpp"

using namespace kpos;

namespace {

Mat2 random_sl2(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat2 m;
  do {
    m << n(rng), n(rng), n(rng), n(rng);
  } while (std::abs(m.determinant()) < 0.2);
  if (m.determinant() < 0) m.col(0) *= -1.0;
  return m / std::sqrt(m.determinant());
}

bool is_pm_identity(const Mat2& m, double tol) {
  return (m - Mat2::Identity()).norm() < tol || (m + Mat2::Identity()).norm() < tol;
}

}  // namespace

TEST_CASE("reduce and word basics") {
  CHECK(reduce(Word{{1, -1, 2}}) == Word{{2}});
  CHECK(reduce(Word{}).empty());
  CHECK(reduce(Word{{1, 2, -2, -1, 3}}) == Word{{3}});
  CHECK(Word{{1, -2}}.inverse() == Word{{2, -1}});
  CHECK(concat(Word{{1, 2}}, Word{{-2, 3}}) == Word{{1, 3}});
}

TEST_CASE("enumerate_words counts reduced words") {
  const auto f2 = enumerate_words(MarkedGroup::free(2), 2);
  CHECK(f2.size() == 16);
  std::set<std::vector<int>> seen;
  for (const Word& w : f2) {
    CHECK(reduce(w) == w);
    seen.insert(w.letters);
  }
  CHECK(seen.size() == f2.size());
  for (size_t i = 1; i < f2.size(); ++i) CHECK(f2[i - 1] < f2[i]);

  const auto s2 = enumerate_words(MarkedGroup::surface(2), 3);
  CHECK(s2.size() == 8 + 8 * 7 + 8 * 49);
  CHECK(enumerate_words(MarkedGroup::free(1), 4).size() == 8);
  CHECK_THROWS_AS(enumerate_words(MarkedGroup::free(2), 11), Error);
}

TEST_CASE("generator names round-trip") {
  const MarkedGroup s = MarkedGroup::surface(2);
  CHECK(s.generator_name(1) == "a1");
  CHECK(s.generator_name(4) == "b2");
  const Word w{{1, -4, 3}};
  CHECK(s.to_string(w) == "a1 b2^-1 a2");
  CHECK(s.parse(s.to_string(w)) == w);
  CHECK(MarkedGroup::free(2).to_string(Word{{2, -1}}) == "b a^-1");
  CHECK_THROWS_AS(s.parse("c7"), Error);
  CHECK_THROWS_AS(MarkedGroup::surface(1), Error);
}

TEST_CASE("octagon holonomy") {
  const Holonomy2 h = octagon_holonomy();
  REQUIRE(h.generators.size() == 4);
  CHECK(h.relation_residual < 1e-6);
  for (const Mat2& g : h.generators) {
    CHECK(g.trace() == doctest::Approx(2.0 * (1.0 + std::sqrt(2.0))));
    CHECK(std::abs(g.determinant() - 1.0) < 1e-12);
    CHECK(is_hyperbolic(g));
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const Word c = reduce(Word{{i + 1, j + 1, -(i + 1), -(j + 1)}});
      CHECK_FALSE(is_pm_identity(h.evaluate(c), 1e-6));
    }
  // Every nontrivial word of length <= 3 is hyperbolic in a closed surface group.
  for (const Word& w : enumerate_words(h.group, 3)) CHECK(is_hyperbolic(h.evaluate(w)));
}

TEST_CASE("schottky holonomy") {
  const Holonomy2 h = schottky_holonomy(3.0);
  const auto [ap, am] = fixed_points(h.generators[0]);
  const auto [bp, bm] = fixed_points(h.generators[1]);
  const std::vector<double> pts{ap, am, bp, bm};
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = i + 1; j < 4; ++j) CHECK(circle_distance(pts[i], pts[j]) > 1e-3);
  for (const Word& w : enumerate_words(h.group, 6)) CHECK(is_hyperbolic(h.evaluate(w)));

  const Mat2 ab = h.evaluate(Word{{1, 2}}), ba = h.evaluate(Word{{2, 1}});
  CHECK(ab.trace() == doctest::Approx(ba.trace()));
  CHECK(circle_distance(fixed_points(ab).first, fixed_points(ba).first) > 1e-6);

  CHECK_THROWS_AS(schottky_holonomy(1.001), Error);
  CHECK_THROWS_AS(schottky_holonomy(0.5), Error);
}

TEST_CASE("fixed points") {
  Mat2 d = Mat2::Zero();
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  const auto [p, m] = fixed_points(d);
  CHECK(circle_distance(p, 0.0) < 1e-14);
  CHECK(circle_distance(m, std::numbers::pi) < 1e-14);
  const auto [pi, mi] = fixed_points(d.inverse());
  CHECK(circle_distance(pi, m) < 1e-14);
  CHECK(circle_distance(mi, p) < 1e-14);
  CHECK_THROWS_AS(fixed_points(Mat2::Identity()), Error);

  std::mt19937_64 rng(21);
  const Holonomy2 h = octagon_holonomy();
  for (int trial = 0; trial < 100; ++trial) {
    const Mat2 c = random_sl2(rng);
    const Mat2 g = h.generators[static_cast<size_t>(trial % 4)];
    const Mat2 conj = c * g * c.inverse();
    const auto [gp, gm] = fixed_points(g);
    const auto [cp, cm] = fixed_points(conj);
    CHECK(circle_distance(cp, act(c, gp)) < 1e-8);
    CHECK(circle_distance(cm, act(c, gm)) < 1e-8);
    // The attracting point is fixed and attracts nearby points.
    CHECK(circle_distance(act(g, gp), gp) < 1e-12);
    const double near = gp + 0.3;
    CHECK(circle_distance(act(g, near), gp) < circle_distance(near, gp));
  }
}

TEST_CASE("word fixed points are equivariant under the holonomy") {
  const Holonomy2 h = octagon_holonomy();
  const auto words = enumerate_words(h.group, 2);
  for (const Word& gamma : {Word{{1}}, Word{{-3}}, Word{{2, 4}}})
    for (const Word& w : words) {
      const Word conj = concat(concat(gamma, w), gamma.inverse());
      const double moved = act(h.evaluate(gamma), fixed_points(h.evaluate(w)).first);
      CHECK(circle_distance(fixed_points(h.evaluate(conj)).first, moved) < 1e-8);
    }
}

TEST_CASE("cyclic order predicates") {
  const double pi = std::numbers::pi;
  CHECK(cyclically_ordered({0, pi / 2, pi, 3 * pi / 2}));
  CHECK_FALSE(cyclically_ordered({3 * pi / 2, pi, pi / 2, 0}));
  CHECK(cyclically_ordered({pi, 3 * pi / 2, 0, pi / 2}));
  CHECK_THROWS_AS(cyclically_ordered({0.0, 1.0, 1.0 + 1e-13}), Error);

  // Brute-force oracle: walk counterclockwise around a 720-point grid.
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> pick(0, 719);
  const double step = 2 * pi / 720;
  for (int trial = 0; trial < 2000; ++trial) {
    int ix = pick(rng), iy = pick(rng), iz = pick(rng), iw = pick(rng);
    if (std::set<int>{ix, iy, iz, iw}.size() < 4) continue;
    bool y_first = false, w_first = false;
    for (int i = (ix + 1) % 720; i != iz; i = (i + 1) % 720) {
      y_first |= i == iy;
      w_first |= i == iw;
    }
    const bool expect = y_first != w_first;
    CHECK(in_interval(iy * step, ix * step, iz * step, iw * step) == expect);
  }
}

TEST_CASE("generators preserve cyclic order") {
  const Holonomy2 h = octagon_holonomy();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> t{u(rng), u(rng), u(rng)};
    const Mat2& g = h.generators[static_cast<size_t>(trial % 4)];
    const bool before = cyclically_ordered(t);
    CHECK(cyclically_ordered({act(g, t[0]), act(g, t[1]), act(g, t[2])}) == before);
  }
}

TEST_CASE("linking") {
  const Holonomy2 s = schottky_holonomy(3.0);
  CHECK_FALSE(linked(Word{{1}}, Word{{2}}, s));
  const Holonomy2 o = octagon_holonomy();
  CHECK(linked(Word{{1}}, Word{{3}}, o));
  CHECK(linked(Word{{2}}, Word{{4}}, o));
  CHECK_THROWS_AS(linked(Word{{1}}, Word{{1, 1}}, o), Error);
  CHECK_THROWS_AS(linked(Word{{1}}, Word{{-1}}, o), Error);
  CHECK(linked(Word{{1}}, Word{{3}}, o) == linked(Word{{3}}, Word{{1}}, o));
}
