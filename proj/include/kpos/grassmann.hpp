#pragma once

#include <vector>

#include "kpos/numlin.hpp"
#include "kpos/subspace.hpp"

namespace kpos {

struct SignedLog {
  int sign = 0;  // -1, 0, +1
  double log_abs = 0.0;
};

SignedLog signed_log_det(const Matrix& m);

// Smallest over largest singular value of [V | W].
double transversality_margin(const Subspace& v, const Subspace& w);
bool transverse(const Subspace& v, const Subspace& w, const TolerancePolicy& tol = {});

Subspace meet(const Subspace& v, const Subspace& w, const TolerancePolicy& tol = {});
Subspace join(const std::vector<Subspace>& parts, const TolerancePolicy& tol = {});

double direct_margin(const std::vector<Subspace>& parts);
bool sum_direct(const std::vector<Subspace>& parts, const TolerancePolicy& tol = {});

double wedge_vol(const Subspace& v, const Subspace& w);

// Extended real value of a cross ratio, kept as sign and log-magnitude.
struct CrossRatio {
  int sign = 1;
  double log_abs = 0.0;
  bool zero = false;
  bool infinite = false;

  double value() const;
};

CrossRatio cross_ratio_k(const Subspace& v1, const Subspace& w2, const Subspace& w3, const Subspace& v4,
                         const TolerancePolicy& tol = {});

// log of (l_1...l_k)/(l_d...l_{d-k+1}) in modulus; throws NoGap unless the
// spectrum has gaps at k and d-k.
double cr_period_expected_log(const Spectrum& s, int k, const TolerancePolicy& tol = {});
double cr_period_expected(const Spectrum& s, int k, const TolerancePolicy& tol = {});

// E -> E/kernel, modelled on the orthogonal complement of the kernel.
class QuotientMap {
 public:
  explicit QuotientMap(Subspace kernel);

  const Subspace& kernel() const { return kernel_; }
  int ambient_dim() const { return kernel_.ambient_dim(); }
  int target_dim() const { return static_cast<int>(complement_.cols()); }
  const Matrix& complement() const { return complement_; }

  Subspace push(const Subspace& v, const TolerancePolicy& tol = {}) const;

 private:
  Subspace kernel_;
  Matrix complement_;
};

QuotientMap quotient(const Subspace& kernel);

// k-subsets of {1..d} in lexicographic order, 1-based.
std::vector<std::vector<int>> lex_subsets(int d, int k);

Matrix ext_power_matrix(const Matrix& m, int k);
// Plucker vector of a k-plane in the lexicographic wedge basis.
Vector plucker_vector(const Subspace& v);
Subspace ext_power_subspace(const Subspace& v);

}  // namespace kpos
