#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpos/exact.hpp"
#include "kpos/numlin.hpp"
#include "kpos/subspace.hpp"

namespace kpos {

struct MinorIndex {
  std::vector<int> rows;  // 1-based, increasing
  std::vector<int> cols;

  std::string to_string() const;
  bool operator==(const MinorIndex& o) const { return rows == o.rows && cols == o.cols; }
};

// Minors not identically zero on unit upper-triangular matrices:
// equal-size index sets with rows[l] <= cols[l] for every l.
std::vector<MinorIndex> nonvanishing_minors(int d);

template <class T>
struct UnipotentCoords {
  DenseMat<T> u;

  int dim() const { return u.rows(); }
  // Throws NotUnipotent unless u is unit upper-triangular (exactly).
  static UnipotentCoords from(DenseMat<T> m);
  UnipotentCoords inverse() const;
};

using UnipotentF = UnipotentCoords<double>;
using UnipotentQ = UnipotentCoords<Rational>;

UnipotentF to_unipotent(const Matrix& m);
Matrix to_matrix(const UnipotentF& u);
UnipotentF to_float(const UnipotentQ& u);

enum class PosStatus { Positive, Negative, Indeterminate };

struct PositivityVerdict {
  PosStatus status = PosStatus::Negative;
  // Sign torus t with every listed minor of t P t^-1 positive (when positive).
  std::vector<int> torus;
  // Witness when not positive: factor index within the chain, the minor and
  // its value after the least-bad torus normalization.
  int factor = -1;
  MinorIndex minor;
  double value = 0.0;
  std::string note;
  // Smallest |minor| / Hadamard bound seen under the chosen torus.
  double min_rel_minor = 0.0;

  bool positive() const { return status == PosStatus::Positive; }
};

// |minor| below guard * (product of the norms of the rows of u it uses)
// counts as an undecided sign for floating inputs.
constexpr double kMinorGuard = 1e-10;

PositivityVerdict is_totally_positive(const UnipotentF& u, double guard = kMinorGuard);
PositivityVerdict is_totally_positive(const UnipotentQ& u);
// A single sign torus must work for all factors at once.
PositivityVerdict chain_totally_positive(const std::vector<UnipotentF>& chain, double guard = kMinorGuard);
PositivityVerdict chain_totally_positive(const std::vector<UnipotentQ>& chain);

// g with g x = standard flag <e_d,...,e_{d-j+1}> and g z = <e_1,...,e_j>.
Matrix adapted_frame(const Flag& x, const Flag& z, const TolerancePolicy& tol = {});
UnipotentF unipotent_factor(const Flag& f, const Matrix& frame, const TolerancePolicy& tol = {});

PositivityVerdict triple_positive(const Flag& x, const Flag& y, const Flag& z, const TolerancePolicy& tol = {},
                                  double guard = kMinorGuard);
PositivityVerdict tuple_positive(const std::vector<Flag>& flags, const TolerancePolicy& tol = {},
                                 double guard = kMinorGuard);

struct CurvePoint {
  double angle = 0.0;
  Flag flag;
};

struct CurveVerdict {
  PositivityVerdict verdict;  // first failure, or positive
  std::vector<int> tuple;     // sample indices of the reported tuple
  long tuples_tested = 0;
  long negative = 0;
  long indeterminate = 0;
  double min_rel_minor = 0.0;  // over positive tuples
};

// Tests tuple_positive on increasing-angle subtuples of sizes 3..n_max.
// When more than `cap` tuples exist, a seeded subset of size `cap` is used.
CurveVerdict curve_positive(std::vector<CurvePoint> samples, int n_max = 4, long cap = 20000,
                            std::uint64_t seed = 1, const TolerancePolicy& tol = {}, double guard = kMinorGuard);

}  // namespace kpos
