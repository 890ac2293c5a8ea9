#pragma once

#include <vector>

#include "kpos/numlin.hpp"

namespace kpos {

// A linear subspace of R^d stored by an orthonormal basis (d x k).
class Subspace {
 public:
  Subspace() = default;

  static Subspace zero(int ambient_dim);
  // Column span; the dimension is decided by rank_tol.
  static Subspace span(const Matrix& columns, const TolerancePolicy& tol = {});
  // Columns assumed independent. Householder QR keeps span(first j columns)
  // for every j, so a frame produces a flag by taking leading pieces.
  static Subspace from_independent(const Matrix& columns);
  // span(e_i : i in indices), 1-based.
  static Subspace coordinate(int ambient_dim, const std::vector<int>& indices);

  int dim() const { return static_cast<int>(basis_.cols()); }
  int ambient_dim() const { return ambient_; }
  const Matrix& basis() const { return basis_; }

  Matrix projector() const { return basis_ * basis_.transpose(); }
  // Largest distance of a unit vector of *this from `outer`.
  double containment_residual(const Subspace& outer) const;
  bool contained_in(const Subspace& outer, double tol = 1e-9) const {
    return containment_residual(outer) < tol;
  }
  // Orthogonal complement.
  Subspace complement() const;
  // Largest principal angle sine between equal-dimensional subspaces.
  double distance(const Subspace& other) const;

 private:
  Subspace(Matrix basis, int ambient) : basis_(std::move(basis)), ambient_(ambient) {}

  Matrix basis_;
  int ambient_ = 0;
};

// A nested chain of subspaces with strictly increasing dimensions.
class Flag {
 public:
  Flag() = default;

  // Throws NotNested if a piece is not contained in the next one
  // (residual >= nest_tol) or dimensions do not strictly increase.
  static Flag from_pieces(std::vector<Subspace> pieces, double nest_tol = 1e-9);
  // Pieces span(first j columns) for j in dims (all of 1..d-1 when empty).
  static Flag from_frame(const Matrix& frame, std::vector<int> dims = {});

  const std::vector<Subspace>& pieces() const { return pieces_; }
  int ambient_dim() const { return ambient_; }
  bool is_full() const;
  bool has_piece(int j) const;
  const Subspace& piece(int j) const;  // throws MissingFlagPiece
  double nesting_residual() const;

 private:
  std::vector<Subspace> pieces_;
  int ambient_ = 0;
};

}  // namespace kpos
