#include "kpos/subspace.hpp"

#include <algorithm>
#include <string>

namespace kpos {

Subspace Subspace::zero(int ambient_dim) { return Subspace(Matrix(ambient_dim, 0), ambient_dim); }

Subspace Subspace::span(const Matrix& columns, const TolerancePolicy& tol) {
  const int d = static_cast<int>(columns.rows());
  if (columns.cols() == 0) return zero(d);
  Eigen::JacobiSVD<Matrix> svd(columns, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  int r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    for (int i = 0; i < s.size(); ++i)
      if (s(i) > tol.rank_rel_tol * s(0)) ++r;
  }
  return Subspace(svd.matrixU().leftCols(r), d);
}

Subspace Subspace::from_independent(const Matrix& columns) {
  const int d = static_cast<int>(columns.rows());
  const int k = static_cast<int>(columns.cols());
  if (k > d) fail(ErrorCode::DimMismatch, "more columns than ambient dimension");
  if (k == 0) return zero(d);
  Eigen::HouseholderQR<Matrix> qr(columns);
  Matrix q = qr.householderQ() * Matrix::Identity(d, k);
  return Subspace(std::move(q), d);
}

Subspace Subspace::coordinate(int ambient_dim, const std::vector<int>& indices) {
  Matrix b = Matrix::Zero(ambient_dim, static_cast<Eigen::Index>(indices.size()));
  for (size_t c = 0; c < indices.size(); ++c) {
    const int i = indices[c];
    if (i < 1 || i > ambient_dim) fail(ErrorCode::IndexOutOfRange, "coordinate index");
    b(i - 1, static_cast<Eigen::Index>(c)) = 1.0;
  }
  return Subspace(std::move(b), ambient_dim);
}

double Subspace::containment_residual(const Subspace& outer) const {
  if (outer.ambient_ != ambient_) fail(ErrorCode::DimMismatch, "ambient dimensions differ");
  if (dim() == 0) return 0.0;
  const Matrix r = basis_ - outer.basis_ * (outer.basis_.transpose() * basis_);
  if (r.size() == 0) return 0.0;
  return singular_values(r)(0);
}

Subspace Subspace::complement() const {
  const int d = ambient_;
  Matrix full = Matrix::Identity(d, d) - projector();
  if (dim() == 0) return Subspace(Matrix::Identity(d, d), d);
  Eigen::JacobiSVD<Matrix> svd(full, Eigen::ComputeFullU);
  return Subspace(svd.matrixU().leftCols(d - dim()), d);
}

double Subspace::distance(const Subspace& other) const {
  if (other.dim() != dim()) fail(ErrorCode::DimMismatch, "distance needs equal dimensions");
  return containment_residual(other);
}

Flag Flag::from_pieces(std::vector<Subspace> pieces, double nest_tol) {
  Flag f;
  if (pieces.empty()) return f;
  f.ambient_ = pieces.front().ambient_dim();
  for (size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].ambient_dim() != f.ambient_) fail(ErrorCode::DimMismatch, "flag pieces in different spaces");
    if (i > 0) {
      if (pieces[i].dim() <= pieces[i - 1].dim())
        fail(ErrorCode::NotNested, "flag dimensions must strictly increase");
      const double r = pieces[i - 1].containment_residual(pieces[i]);
      if (!(r < nest_tol))
        fail(ErrorCode::NotNested, "piece of dim " + std::to_string(pieces[i - 1].dim()) +
                                       " not inside next piece, residual " + std::to_string(r));
    }
  }
  f.pieces_ = std::move(pieces);
  return f;
}

Flag Flag::from_frame(const Matrix& frame, std::vector<int> dims) {
  const int d = static_cast<int>(frame.rows());
  if (dims.empty())
    for (int j = 1; j < d; ++j) dims.push_back(j);
  const int kmax = *std::max_element(dims.begin(), dims.end());
  if (kmax > frame.cols()) fail(ErrorCode::DimMismatch, "frame has too few columns");
  Subspace all = Subspace::from_independent(frame.leftCols(kmax));
  std::vector<Subspace> pieces;
  for (int j : dims) pieces.push_back(Subspace::from_independent(all.basis().leftCols(j)));
  return from_pieces(std::move(pieces));
}

bool Flag::is_full() const {
  if (ambient_ < 2 || static_cast<int>(pieces_.size()) != ambient_ - 1) return false;
  for (int j = 1; j < ambient_; ++j)
    if (pieces_[j - 1].dim() != j) return false;
  return true;
}

bool Flag::has_piece(int j) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [j](const Subspace& s) { return s.dim() == j; });
}

const Subspace& Flag::piece(int j) const {
  for (const auto& s : pieces_)
    if (s.dim() == j) return s;
  fail(ErrorCode::MissingFlagPiece, "flag has no piece of dimension " + std::to_string(j));
}

double Flag::nesting_residual() const {
  double r = 0.0;
  for (size_t i = 1; i < pieces_.size(); ++i) r = std::max(r, pieces_[i - 1].containment_residual(pieces_[i]));
  return r;
}

}  // namespace kpos
