#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "kpos/error.hpp"

namespace kpos {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Subspace;

struct TolerancePolicy {
  double rank_rel_tol = 1e-9;
  double gap_tie_tol = 1e-9;
  double cr_rel_tol = 1e-8;

  // Throws InvalidTolerance unless every field lies in (0, 1).
  void validate() const;
};

// Eigenvalues sorted by non-increasing modulus. log_moduli is the primary
// data; values may be rescaled copies when the source matrix over/underflows.
struct Spectrum {
  std::vector<std::complex<double>> values;
  std::vector<double> log_moduli;

  int dim() const { return static_cast<int>(log_moduli.size()); }
  double modulus(int i) const;  // 1-based
};

Spectrum eig_sorted(const Matrix& m, const TolerancePolicy& tol = {});

// |lambda_k| / |lambda_{k+1}|, k is 1-based.
double gap_ratio(const Spectrum& s, int k);
double log_gap_ratio(const Spectrum& s, int k);
bool has_gap(const Spectrum& s, int k, const TolerancePolicy& tol = {});

int rank_tol(const Matrix& a, const TolerancePolicy& tol = {});
Vector singular_values(const Matrix& a);

// Orthonormal basis of the dominant k-dimensional real invariant subspace.
Subspace invariant_subspace_top(const Matrix& m, int k, const TolerancePolicy& tol = {});

// A product of matrices whose value is mantissa * 2^exp2. Rescaling by powers
// of two is exact, so long words neither overflow nor lose precision to it.
struct ScaledMatrix {
  Matrix mantissa;
  long exp2 = 0;

  double log_scale() const;
  Matrix value() const;  // may overflow for long words
};

ScaledMatrix chain_product(const std::vector<const Matrix*>& factors);

// Eigen-structure of a product of factors. The product is never trusted for
// small eigenvalues: moduli come from volume growth of nested subspaces under
// orthogonal iteration through the individual factors, so every modulus keeps
// relative accuracy even when the product's condition number exceeds 1e16.
struct ChainEigen {
  Spectrum spectrum;
  // Leading k columns span the dominant k-dimensional invariant subspace
  // whenever settled[k] holds (index 0 and d are always settled).
  Matrix flag_basis;
  std::vector<bool> settled;
  int sweeps = 0;

  // Throws NoGap on a tie and NotConverged if the iteration did not settle.
  Subspace top(int k, const TolerancePolicy& tol = {}) const;
};

// `inverse_factors` is the inverse word in order (may be empty); it only
// seeds the iteration.
ChainEigen chain_eigen(const std::vector<const Matrix*>& factors,
                       const std::vector<const Matrix*>& inverse_factors,
                       const TolerancePolicy& tol = {});

Spectrum chain_spectrum(const std::vector<const Matrix*>& factors,
                        const std::vector<const Matrix*>& inverse_factors,
                        const TolerancePolicy& tol = {});

// Dominant k-dimensional invariant subspace of the product of `factors`,
// refined by orthogonal iteration through the individual factors.
// `spec` must be the spectrum of that product.
Subspace chain_dominant_subspace(const std::vector<const Matrix*>& factors, int k,
                                 const Spectrum& spec, const TolerancePolicy& tol = {});

}  // namespace kpos
