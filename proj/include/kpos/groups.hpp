#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kpos/error.hpp"

namespace kpos {

using Mat2 = Eigen::Matrix2d;

// Letters are signed 1-based generator indices: +i is generator i, -i its inverse.
struct Word {
  std::vector<int> letters;

  int length() const { return static_cast<int>(letters.size()); }
  bool empty() const { return letters.empty(); }
  Word inverse() const;
  bool operator==(const Word& o) const { return letters == o.letters; }
  bool operator<(const Word& o) const;  // length, then letter order
};

Word reduce(const Word& w);
Word concat(const Word& a, const Word& b);

class MarkedGroup {
 public:
  enum class Kind { Surface, Free };

  // Genus g >= 2 with relator a1 b1 a1^-1 b1^-1 ... unless one is supplied.
  static MarkedGroup surface(int genus);
  static MarkedGroup surface(int genus, Word relator);
  // Rank 1 is allowed for cyclic experiments; surface kinds still need g >= 2.
  static MarkedGroup free(int rank);

  Kind kind() const { return kind_; }
  int genus() const { return kind_ == Kind::Surface ? generators_ / 2 : 0; }
  int rank() const { return generators_; }
  int generator_count() const { return generators_; }
  const Word& relator() const { return relator_; }

  // a1, b1, a2, ... for surfaces; a, b, c, ... for free groups.
  std::string generator_name(int index) const;  // 1-based
  // Throws ConfigError for an unknown name.
  int generator_index(const std::string& name) const;
  std::string to_string(const Word& w) const;
  Word parse(const std::string& text) const;

 private:
  Kind kind_ = Kind::Free;
  int generators_ = 0;
  Word relator_;
};

// All freely reduced nonempty words of length 1..L in length-lex order.
// The surface relator is not applied.
std::vector<Word> enumerate_words(const MarkedGroup& group, int L);

struct Holonomy2 {
  MarkedGroup group;
  std::vector<Mat2> generators;
  double relation_residual = 0.0;

  Mat2 evaluate(const Word& w) const;
};

// Residual min over signs of ||relator - (+-I)||; 0 for free groups.
double relation_residual(const MarkedGroup& group, const std::vector<Mat2>& generators);

// Genus 2 from the regular right-angled side pairing of the octagon, with
// relator g1 g2^-1 g3 g4^-1 g1^-1 g2 g3^-1 g4.
Holonomy2 octagon_holonomy();
// Rank-2 Schottky group: b = diag(spread, 1/spread) and a pairs two disjoint
// circles inside the annulus 1 < |z| < spread^2 of the upper half-plane.
Holonomy2 schottky_holonomy(double spread);

bool is_hyperbolic(const Mat2& m, double tol = 1e-9);

// Attracting and repelling fixed points as angles in [0, 2pi) through
// theta = 2 atan2(v2, v1). Throws NotHyperbolic.
std::pair<double, double> fixed_points(const Mat2& m, double tol = 1e-9);

// Image of a boundary angle under the projective action of m.
double act(const Mat2& m, double theta);

// Counterclockwise order around the circle. Throws DegenerateAngles.
bool cyclically_ordered(const std::vector<double>& angles);
// y lies in the component of the circle minus {x, z} that avoids w.
bool in_interval(double y, double x, double z, double w);

bool linked(const Word& g, const Word& h, const Holonomy2& hol);

double circle_distance(double a, double b);
double normalize_angle(double a);

}  // namespace kpos
