#pragma once

#include <map>
#include <string>
#include <vector>

#include "kpos/exact.hpp"
#include "kpos/groups.hpp"
#include "kpos/numlin.hpp"
#include "kpos/subspace.hpp"

namespace kpos {

// A representation of the group of `holonomy` into PGL(d). The holonomy is
// kept because boundary points are modelled by its fixed points.
struct MarkedRep {
  Holonomy2 holonomy;
  int dim = 0;
  std::vector<Matrix> generators;
  std::vector<Matrix> inverses;
  std::string label;
  std::vector<int> blocks;  // block sizes along the diagonal, {dim} if none

  const MarkedGroup& group() const { return holonomy.group; }
};

// Validates invertibility, the block structure and, for surface groups, the
// relator up to scalar.
MarkedRep make_rep(Holonomy2 hol, std::vector<Matrix> generators, std::string label, std::vector<int> blocks = {});

// Scale-free residual of the relator image against a multiple of I.
double rep_relation_residual(const MarkedRep& r);

// Action on degree d-1 binary forms in the basis x^{d-1}, x^{d-2}y, ..., y^{d-1}.
template <class T>
DenseMat<T> tau_power(int d, const T& a, const T& b, const T& c, const T& e);
Matrix tau_irr(int d, const Mat2& m, double tol = 1e-9);

// Block sum tau_{d1} + ... + tau_{dj}; the multiindex must be non-increasing.
MarkedRep fuchsian_rep(const std::vector<int>& multiindex, const Holonomy2& hol);
MarkedRep dual_rep(const MarkedRep& r);
MarkedRep ext_power_rep(const MarkedRep& r, int k);
MarkedRep direct_sum(const MarkedRep& a, const MarkedRep& b);

ScaledMatrix evaluate_scaled(const MarkedRep& r, const Word& w);
Matrix evaluate(const MarkedRep& r, const Word& w);
// Factor pointers of w and of w^-1, in order.
std::vector<const Matrix*> word_factors(const MarkedRep& r, const Word& w);
std::vector<const Matrix*> inverse_word_factors(const MarkedRep& r, const Word& w);

// Eigen-structure of rho(w) together with the attracting point of w. Reps with
// more than one diagonal block are iterated block by block.
struct WordDynamics {
  Word word;
  bool hyperbolic = false;
  double angle = 0.0;
  ChainEigen eigen;
};

ChainEigen word_eigen(const MarkedRep& r, const Word& w, const TolerancePolicy& tol = {});
std::vector<WordDynamics> word_dynamics(const MarkedRep& r, const std::vector<Word>& words,
                                        const TolerancePolicy& tol = {}, int jobs = 1);
// keep[i] is false when angle i repeats an earlier angle within 1e-10.
std::vector<bool> first_of_each_angle(const std::vector<double>& angles);

struct BoundarySample {
  Word word;
  double angle = 0.0;
  ScaledMatrix matrix;
  Spectrum spectrum;
  Flag flag;  // pieces x^j for the requested j
};

struct SkippedWord {
  Word word;
  std::string reason;
};

struct SampleSet {
  std::vector<BoundarySample> samples;  // sorted by angle
  std::vector<SkippedWord> skipped;
  int candidates = 0;
};

// Words of length 1..L, deduplicated by attracting fixed point (within 1e-10,
// keeping the first in length-lex order). The d-j pieces of a sample come
// from the same chain iteration as the j pieces.
std::vector<Word> boundary_words(const Holonomy2& hol, int L);
// J empty means the full flag.
SampleSet select_samples(const MarkedRep& r, const std::vector<WordDynamics>& dyn, const std::vector<int>& J,
                         const TolerancePolicy& tol = {});
SampleSet boundary_flag_samples(const MarkedRep& r, const std::vector<Word>& words, const std::vector<int>& J,
                                const TolerancePolicy& tol = {}, int jobs = 1);
SampleSet boundary_flag_samples(const MarkedRep& r, int L, const std::vector<int>& J,
                                const TolerancePolicy& tol = {}, int jobs = 1);

// Up to m samples spread around the circle: start from the first sample and
// repeatedly add the one farthest from those chosen (ties to the lower index).
std::vector<size_t> spread_subsample(const std::vector<BoundarySample>& samples, size_t m);

// base = eta_1 + eta_2 with eta_1 on the first `split` coordinates.
struct DeformationPath {
  MarkedRep base;
  int split = 0;
  std::vector<double> chi;  // value of the character on each generator

  double character(const Word& w) const;
};

// Throws NotBlockDiagonal if the base does not split, NotHomomorphism if chi
// is zero on every generator or has the wrong length.
DeformationPath make_path(MarkedRep base, int split, std::vector<double> chi);
MarkedRep scaling_path(const DeformationPath& path, double t);

// Log-moduli of rho_t(w) labelled by the sorted order at t = 0. The k-th entry
// (k = 1..d-1) is the log ratio of the labels k and k+1; it is linear in t and
// turns negative once the labelled eigenvalues swap.
struct TrackedGaps {
  std::vector<double> at_zero;  // log gaps at t = 0
  std::vector<double> slope;    // d/dt of each log gap
  std::vector<double> at(double t) const;
};
TrackedGaps tracked_log_gaps(const DeformationPath& path, const Word& w);

// The 4x4 matrix with eps_n = -n / (lambda (n^2 lambda + 1)).
Matrix eps_family(double lambda, int n);
// Z-representation generated by eps_family; positive powers attract to angle 0.
MarkedRep eps_family_rep(double lambda, int n);

}  // namespace kpos
