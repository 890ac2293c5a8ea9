#include "kpos/groups.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace kpos {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleTol = 1e-12;

int letter_key(int letter) { return 2 * (std::abs(letter) - 1) + (letter < 0 ? 1 : 0); }

Mat2 inverse_sl2(const Mat2& m) {
  Mat2 r;
  r << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return r / m.determinant();
}

Mat2 rotation(double theta) {
  Mat2 r;
  r << std::cos(theta / 2), std::sin(theta / 2), -std::sin(theta / 2), std::cos(theta / 2);
  return r;
}

double vector_angle(double v1, double v2) { return normalize_angle(2.0 * std::atan2(v2, v1)); }

void check_distinct(const std::vector<double>& a) {
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = i + 1; j < a.size(); ++j)
      if (circle_distance(a[i], a[j]) < kAngleTol)
        fail(ErrorCode::DegenerateAngles, "angles " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

// Counterclockwise offset from x to y in [0, 2pi).
double ccw(double x, double y) { return normalize_angle(y - x); }

Holonomy2 finish(MarkedGroup group, std::vector<Mat2> gens, double bound) {
  for (size_t i = 0; i < gens.size(); ++i)
    if (std::abs(gens[i].determinant() - 1.0) >= 1e-9)
      fail(ErrorCode::ConstructionFailed, "generator " + std::to_string(i + 1) + " is not unimodular");
  Holonomy2 h{std::move(group), std::move(gens), 0.0};
  h.relation_residual = relation_residual(h.group, h.generators);
  if (!(h.relation_residual < bound))
    fail(ErrorCode::ConstructionFailed, "relation residual " + std::to_string(h.relation_residual));
  return h;
}

}  // namespace

double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double circle_distance(double a, double b) {
  const double d = normalize_angle(a - b);
  return std::min(d, kTwoPi - d);
}

Word Word::inverse() const {
  Word r;
  r.letters.reserve(letters.size());
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) r.letters.push_back(-*it);
  return r;
}

bool Word::operator<(const Word& o) const {
  if (letters.size() != o.letters.size()) return letters.size() < o.letters.size();
  for (size_t i = 0; i < letters.size(); ++i)
    if (letters[i] != o.letters[i]) return letter_key(letters[i]) < letter_key(o.letters[i]);
  return false;
}

Word reduce(const Word& w) {
  Word r;
  for (int l : w.letters) {
    if (!r.letters.empty() && r.letters.back() == -l)
      r.letters.pop_back();
    else
      r.letters.push_back(l);
  }
  return r;
}

Word concat(const Word& a, const Word& b) {
  Word r = a;
  r.letters.insert(r.letters.end(), b.letters.begin(), b.letters.end());
  return reduce(r);
}

MarkedGroup MarkedGroup::surface(int genus) {
  Word rel;
  for (int i = 0; i < genus; ++i) {
    const int a = 2 * i + 1, b = 2 * i + 2;
    rel.letters.insert(rel.letters.end(), {a, b, -a, -b});
  }
  return surface(genus, rel);
}

MarkedGroup MarkedGroup::surface(int genus, Word relator) {
  if (genus < 2) fail(ErrorCode::InvalidGroup, "surface genus must be at least 2");
  MarkedGroup g;
  g.kind_ = Kind::Surface;
  g.generators_ = 2 * genus;
  for (int l : relator.letters)
    if (l == 0 || std::abs(l) > g.generators_) fail(ErrorCode::InvalidGroup, "relator letter out of range");
  g.relator_ = std::move(relator);
  return g;
}

MarkedGroup MarkedGroup::free(int rank) {
  if (rank < 1 || rank > 26) fail(ErrorCode::InvalidGroup, "free rank must lie in 1..26");
  MarkedGroup g;
  g.kind_ = Kind::Free;
  g.generators_ = rank;
  return g;
}

std::string MarkedGroup::generator_name(int index) const {
  if (index < 1 || index > generators_) fail(ErrorCode::IndexOutOfRange, "generator " + std::to_string(index));
  if (kind_ == Kind::Free) return std::string(1, static_cast<char>('a' + index - 1));
  return std::string(1, index % 2 == 1 ? 'a' : 'b') + std::to_string((index + 1) / 2);
}

int MarkedGroup::generator_index(const std::string& name) const {
  for (int i = 1; i <= generators_; ++i)
    if (generator_name(i) == name) return i;
  fail(ErrorCode::ConfigError, "unknown generator '" + name + "'");
}

std::string MarkedGroup::to_string(const Word& w) const {
  if (w.empty()) return "e";
  std::string s;
  for (int l : w.letters) {
    if (!s.empty()) s += ' ';
    s += generator_name(std::abs(l));
    if (l < 0) s += "^-1";
  }
  return s;
}

Word MarkedGroup::parse(const std::string& text) const {
  std::istringstream in(text);
  std::string tok;
  Word w;
  while (in >> tok) {
    if (tok == "e") continue;
    int sign = 1;
    if (tok.size() > 3 && tok.compare(tok.size() - 3, 3, "^-1") == 0) {
      sign = -1;
      tok.resize(tok.size() - 3);
    }
    w.letters.push_back(sign * generator_index(tok));
  }
  return reduce(w);
}

std::vector<Word> enumerate_words(const MarkedGroup& group, int L) {
  if (L > 10) fail(ErrorCode::WordTooLong, "word length " + std::to_string(L) + " exceeds 10");
  std::vector<int> alphabet;
  for (int i = 1; i <= group.generator_count(); ++i) alphabet.insert(alphabet.end(), {i, -i});

  std::vector<Word> out, layer{Word{}};
  for (int len = 1; len <= L; ++len) {
    std::vector<Word> next;
    for (const Word& w : layer)
      for (int a : alphabet) {
        if (!w.empty() && w.letters.back() == -a) continue;
        Word x = w;
        x.letters.push_back(a);
        next.push_back(std::move(x));
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

Mat2 Holonomy2::evaluate(const Word& w) const {
  Mat2 m = Mat2::Identity();
  for (int l : w.letters) {
    const Mat2& g = generators.at(static_cast<size_t>(std::abs(l) - 1));
    m = m * (l > 0 ? g : inverse_sl2(g));
  }
  return m;
}

double relation_residual(const MarkedGroup& group, const std::vector<Mat2>& generators) {
  if (static_cast<int>(generators.size()) != group.generator_count())
    fail(ErrorCode::DimMismatch, "generator count does not match the group");
  if (group.kind() == MarkedGroup::Kind::Free) return 0.0;
  const Holonomy2 tmp{group, generators, 0.0};
  const Mat2 r = tmp.evaluate(group.relator());
  return std::min((r - Mat2::Identity()).norm(), (r + Mat2::Identity()).norm());
}

Holonomy2 octagon_holonomy() {
  const double half = std::acosh(1.0 + std::sqrt(2.0));
  Mat2 t = Mat2::Zero();
  t(0, 0) = std::exp(half);
  t(1, 1) = std::exp(-half);
  std::vector<Mat2> gens;
  for (int i = 0; i < 4; ++i) {
    const Mat2 c = rotation(i * std::numbers::pi / 4);
    gens.push_back(c * t * inverse_sl2(c));
  }
  return finish(MarkedGroup::surface(2, Word{{1, -2, 3, -4, -1, 2, -3, 4}}), std::move(gens), 1e-6);
}

Holonomy2 schottky_holonomy(double spread) {
  if (!(spread > 1.0) || spread - 1.0 / spread < 0.01)
    fail(ErrorCode::ConstructionFailed, "spread too close to 1 for disjoint circles");
  const double mu2 = spread * spread;
  const double len = mu2 - 1.0;
  // Isometric circles of a and a^-1: centres c1, c2 on the real axis, radius rho.
  const double c1 = 1.0 + 0.25 * len, c2 = 1.0 + 0.75 * len, rho = 0.2 * len;
  const double r = 1.0 / rho, s = -c1 * r, p = c2 * r;
  Mat2 a;
  a << p, (p * s - 1.0) / r, r, s;
  Mat2 b = Mat2::Zero();
  b(0, 0) = spread;
  b(1, 1) = 1.0 / spread;
  return finish(MarkedGroup::free(2), {a, b}, 1e-6);
}

bool is_hyperbolic(const Mat2& m, double tol) {
  const double det = m.determinant();
  if (!(det > 0)) return false;
  return std::abs(m.trace()) / std::sqrt(det) > 2.0 + tol;
}

std::pair<double, double> fixed_points(const Mat2& m, double tol) {
  if (!is_hyperbolic(m, tol)) fail(ErrorCode::NotHyperbolic, "|trace| <= 2");
  const double tr = m.trace(), det = m.determinant();
  const double disc = std::sqrt(tr * tr - 4.0 * det);
  const double big = tr > 0 ? (tr + disc) / 2 : (tr - disc) / 2;
  const double small = det / big;
  auto eigvec = [&](double lam) {
    // Rows of m - lam I annihilate the eigenvector; use the better conditioned one.
    const double r0 = std::hypot(m(0, 0) - lam, m(0, 1)), r1 = std::hypot(m(1, 0), m(1, 1) - lam);
    if (r0 >= r1) return vector_angle(m(0, 1), lam - m(0, 0));
    return vector_angle(lam - m(1, 1), m(1, 0));
  };
  return {eigvec(big), eigvec(small)};
}

double act(const Mat2& m, double theta) {
  const double v1 = std::cos(theta / 2), v2 = std::sin(theta / 2);
  return vector_angle(m(0, 0) * v1 + m(0, 1) * v2, m(1, 0) * v1 + m(1, 1) * v2);
}

bool cyclically_ordered(const std::vector<double>& angles) {
  check_distinct(angles);
  double prev = 0.0;
  for (size_t i = 1; i < angles.size(); ++i) {
    const double off = ccw(angles[0], angles[i]);
    if (off <= prev) return false;
    prev = off;
  }
  return true;
}

bool in_interval(double y, double x, double z, double w) {
  check_distinct({y, x, z, w});
  const double span = ccw(x, z);
  return (ccw(x, y) < span) != (ccw(x, w) < span);
}

bool linked(const Word& g, const Word& h, const Holonomy2& hol) {
  const auto [gp, gm] = fixed_points(hol.evaluate(g));
  const auto [hp, hm] = fixed_points(hol.evaluate(h));
  const bool same = (circle_distance(gp, hp) < 1e-10 && circle_distance(gm, hm) < 1e-10) ||
                    (circle_distance(gp, hm) < 1e-10 && circle_distance(gm, hp) < 1e-10);
  if (same) fail(ErrorCode::SharedAxis, "elements share their axis");
  check_distinct({gp, gm, hp, hm});
  const double span = ccw(gm, gp);
  return (ccw(gm, hp) < span) != (ccw(gm, hm) < span);
}

}  // namespace kpos
