#include "kpos/grassmann.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace kpos {

namespace {

Matrix concat(const std::vector<Subspace>& parts, int d) {
  int total = 0;
  for (const auto& p : parts) total += p.dim();
  Matrix m(d, total);
  int c = 0;
  for (const auto& p : parts) {
    if (p.ambient_dim() != d) fail(ErrorCode::DimMismatch, "subspaces in different ambient spaces");
    m.middleCols(c, p.dim()) = p.basis();
    c += p.dim();
  }
  return m;
}

Matrix pair_matrix(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim()) fail(ErrorCode::DimMismatch, "ambient dimensions differ");
  if (v.dim() + w.dim() != v.ambient_dim())
    fail(ErrorCode::DimMismatch, "dimensions " + std::to_string(v.dim()) + "+" + std::to_string(w.dim()) +
                                     " do not sum to " + std::to_string(v.ambient_dim()));
  return concat({v, w}, v.ambient_dim());
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

SignedLog signed_log_det(const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorCode::DimMismatch, "determinant of a non-square matrix");
  if (m.rows() == 0) return {1, 0.0};
  Eigen::PartialPivLU<Matrix> lu(m);
  const Matrix& u = lu.matrixLU();
  SignedLog r{static_cast<int>(lu.permutationP().determinant()), 0.0};
  for (int i = 0; i < u.rows(); ++i) {
    const double x = u(i, i);
    if (x == 0.0) return {0, -std::numeric_limits<double>::infinity()};
    if (x < 0.0) r.sign = -r.sign;
    r.log_abs += std::log(std::abs(x));
  }
  return r;
}

double transversality_margin(const Subspace& v, const Subspace& w) {
  const Vector s = singular_values(pair_matrix(v, w));
  if (s.size() == 0) return 1.0;
  if (!(s(0) > 0.0)) return 0.0;
  return s(s.size() - 1) / s(0);
}

bool transverse(const Subspace& v, const Subspace& w, const TolerancePolicy& tol) {
  return transversality_margin(v, w) > tol.rank_rel_tol;
}

Subspace meet(const Subspace& v, const Subspace& w, const TolerancePolicy& tol) {
  if (v.ambient_dim() != w.ambient_dim()) fail(ErrorCode::DimMismatch, "ambient dimensions differ");
  const int d = v.ambient_dim();
  if (v.dim() == 0 || w.dim() == 0) return Subspace::zero(d);
  const Matrix m = concat({v, w}, d);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol.rank_rel_tol * s(0)) ++r;
  const int n = static_cast<int>(m.cols());
  if (r == n) return Subspace::zero(d);
  const Matrix nullv = svd.matrixV().rightCols(n - r);
  return Subspace::span(v.basis() * nullv.topRows(v.dim()), tol);
}

Subspace join(const std::vector<Subspace>& parts, const TolerancePolicy& tol) {
  if (parts.empty()) fail(ErrorCode::DimMismatch, "join of nothing");
  return Subspace::span(concat(parts, parts.front().ambient_dim()), tol);
}

double direct_margin(const std::vector<Subspace>& parts) {
  if (parts.empty()) return 1.0;
  const int d = parts.front().ambient_dim();
  const Matrix m = concat(parts, d);
  if (m.cols() > d) fail(ErrorCode::DimOverflow, "total dimension exceeds ambient dimension");
  if (m.cols() == 0) return 1.0;
  const Vector s = singular_values(m);
  if (!(s(0) > 0.0)) return 0.0;
  return s(s.size() - 1) / s(0);
}

bool sum_direct(const std::vector<Subspace>& parts, const TolerancePolicy& tol) {
  return direct_margin(parts) > tol.rank_rel_tol;
}

double wedge_vol(const Subspace& v, const Subspace& w) { return pair_matrix(v, w).determinant(); }

double CrossRatio::value() const {
  if (zero) return 0.0;
  if (infinite) return std::numeric_limits<double>::infinity();
  return sign * std::exp(log_abs);
}

CrossRatio cross_ratio_k(const Subspace& v1, const Subspace& w2, const Subspace& w3, const Subspace& v4,
                         const TolerancePolicy& tol) {
  const bool t12 = transverse(v1, w2, tol);
  const bool t13 = transverse(v1, w3, tol);
  const bool t42 = transverse(v4, w2, tol);
  const bool t43 = transverse(v4, w3, tol);
  if (!((t12 && t43) || (t13 && t42))) fail(ErrorCode::NotInDomain, "quadruple outside the cross ratio domain");
  CrossRatio cr;
  if (!t13 || !t42) {
    cr.zero = true;
    return cr;
  }
  if (!t12 || !t43) {
    cr.infinite = true;
    return cr;
  }
  const SignedLog a = signed_log_det(pair_matrix(v1, w3));
  const SignedLog b = signed_log_det(pair_matrix(v4, w2));
  const SignedLog c = signed_log_det(pair_matrix(v1, w2));
  const SignedLog e = signed_log_det(pair_matrix(v4, w3));
  cr.sign = a.sign * b.sign * c.sign * e.sign;
  cr.log_abs = a.log_abs + b.log_abs - c.log_abs - e.log_abs;
  return cr;
}

double cr_period_expected_log(const Spectrum& s, int k, const TolerancePolicy& tol) {
  const int d = s.dim();
  if (k < 1 || k >= d) fail(ErrorCode::IndexOutOfRange, "period index");
  if (!has_gap(s, k, tol) || !has_gap(s, d - k, tol)) fail(ErrorCode::NoGap, "needs gaps at k and d-k");
  double r = 0.0;
  for (int i = 0; i < k; ++i) r += s.log_moduli[static_cast<size_t>(i)];
  for (int i = d - k; i < d; ++i) r -= s.log_moduli[static_cast<size_t>(i)];
  return r;
}

double cr_period_expected(const Spectrum& s, int k, const TolerancePolicy& tol) {
  return std::exp(cr_period_expected_log(s, k, tol));
}

QuotientMap::QuotientMap(Subspace kernel) : kernel_(std::move(kernel)) {
  complement_ = kernel_.complement().basis();
}

Subspace QuotientMap::push(const Subspace& v, const TolerancePolicy& tol) const {
  if (v.ambient_dim() != ambient_dim()) fail(ErrorCode::DimMismatch, "push from another space");
  if (v.dim() == 0) return Subspace::zero(target_dim());
  return Subspace::span(complement_.transpose() * v.basis(), tol);
}

QuotientMap quotient(const Subspace& kernel) { return QuotientMap(kernel); }

std::vector<std::vector<int>> lex_subsets(int d, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > d) return out;
  std::vector<int> cur(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<size_t>(i)] = i + 1;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<size_t>(i)] == d - k + i + 1) --i;
    if (i < 0) break;
    ++cur[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) cur[static_cast<size_t>(j)] = cur[static_cast<size_t>(j - 1)] + 1;
  }
  return out;
}

Matrix ext_power_matrix(const Matrix& m, int k) {
  const int d = static_cast<int>(m.rows());
  if (m.cols() != d) fail(ErrorCode::DimMismatch, "exterior power of a non-square matrix");
  if (k < 1 || k > d) fail(ErrorCode::IndexOutOfRange, "exterior power degree");
  if (binom(d, k) > 5000) fail(ErrorCode::DimTooLarge, "exterior power too large");
  const auto subsets = lex_subsets(d, k);
  const int n = static_cast<int>(subsets.size());
  Matrix out(n, n);
  Matrix sub(k, k);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          sub(i, j) = m(subsets[static_cast<size_t>(r)][static_cast<size_t>(i)] - 1,
                        subsets[static_cast<size_t>(c)][static_cast<size_t>(j)] - 1);
      out(r, c) = sub.determinant();
    }
  return out;
}

Vector plucker_vector(const Subspace& v) {
  const int d = v.ambient_dim();
  const int k = v.dim();
  if (k < 1 || k > d) fail(ErrorCode::IndexOutOfRange, "Plucker vector of a zero subspace");
  const auto subsets = lex_subsets(d, k);
  Vector p(static_cast<Eigen::Index>(subsets.size()));
  Matrix sub(k, k);
  for (size_t r = 0; r < subsets.size(); ++r) {
    for (int i = 0; i < k; ++i) sub.row(i) = v.basis().row(subsets[r][static_cast<size_t>(i)] - 1);
    p(static_cast<Eigen::Index>(r)) = sub.determinant();
  }
  return p;
}

Subspace ext_power_subspace(const Subspace& v) { return Subspace::from_independent(plucker_vector(v)); }

}  // namespace kpos
