#include "kpos/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kpos/subspace.hpp"

namespace kpos {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

struct RawEig {
  std::complex<double> value;
  double log_modulus;
  int index;
};

// Eigenvalues of a mantissa matrix shifted by a power-of-two scale, sorted by
// non-increasing modulus. Ties are broken by real then imaginary part so the
// order is reproducible.
std::vector<RawEig> sorted_eigs(const Matrix& m, long exp2) {
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) fail(ErrorCode::NotConverged, "eigenvalue iteration failed");
  const auto& ev = es.eigenvalues();
  std::vector<RawEig> out;
  out.reserve(static_cast<size_t>(ev.size()));
  for (int i = 0; i < ev.size(); ++i) {
    const std::complex<double> v = ev(i);
    const double a = std::abs(v);
    const double lm = a > 0.0 ? std::log(a) + static_cast<double>(exp2) * kLn2
                              : -std::numeric_limits<double>::infinity();
    out.push_back({v, lm, i});
  }
  std::sort(out.begin(), out.end(), [](const RawEig& x, const RawEig& y) {
    if (x.log_modulus != y.log_modulus) return x.log_modulus > y.log_modulus;
    if (x.value.real() != y.value.real()) return x.value.real() > y.value.real();
    return x.value.imag() > y.value.imag();
  });
  return out;
}

std::complex<double> rebuild_value(std::complex<double> raw, double log_modulus) {
  const double a = std::abs(raw);
  if (a == 0.0) return {0.0, 0.0};
  const std::complex<double> phase = raw / a;
  if (log_modulus > 700.0) return phase * std::numeric_limits<double>::infinity();
  if (log_modulus < -700.0) return phase * 0.0;
  return phase * std::exp(log_modulus);
}

Matrix thin_q(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

double signed_log_det_abs(const Matrix& m) {
  Eigen::PartialPivLU<Matrix> lu(m);
  double r = 0.0;
  for (int i = 0; i < m.rows(); ++i) r += std::log(std::abs(lu.matrixLU()(i, i)));
  return r;
}

void rescale(ScaledMatrix& s) {
  const double mx = s.mantissa.cwiseAbs().maxCoeff();
  if (!(mx > 0.0) || !std::isfinite(mx)) return;
  int e = 0;
  std::frexp(mx, &e);
  if (e == 0) return;
  s.mantissa = s.mantissa.unaryExpr([e](double x) { return std::ldexp(x, -e); });
  s.exp2 += e;
}

}  // namespace

void TolerancePolicy::validate() const {
  auto ok = [](double x) { return x > 0.0 && x < 1.0; };
  if (!ok(rank_rel_tol) || !ok(gap_tie_tol) || !ok(cr_rel_tol))
    fail(ErrorCode::InvalidTolerance, "tolerances must lie in (0, 1)");
}

double Spectrum::modulus(int i) const {
  if (i < 1 || i > dim()) fail(ErrorCode::IndexOutOfRange, "spectrum index");
  return std::exp(log_moduli[static_cast<size_t>(i - 1)]);
}

Spectrum eig_sorted(const Matrix& m, const TolerancePolicy& tol) {
  if (m.rows() != m.cols() || m.rows() < 1) fail(ErrorCode::DimMismatch, "eig_sorted needs a square matrix");
  if (!m.allFinite()) fail(ErrorCode::DimMismatch, "matrix has non-finite entries");
  if (rank_tol(m, tol) < m.rows()) fail(ErrorCode::Singular, "matrix is singular within tolerance");
  Spectrum s;
  for (const auto& e : sorted_eigs(m, 0)) {
    s.values.push_back(e.value);
    s.log_moduli.push_back(e.log_modulus);
  }
  return s;
}

double log_gap_ratio(const Spectrum& s, int k) {
  if (k < 1 || k >= s.dim()) fail(ErrorCode::IndexOutOfRange, "gap index " + std::to_string(k));
  return s.log_moduli[static_cast<size_t>(k - 1)] - s.log_moduli[static_cast<size_t>(k)];
}

double gap_ratio(const Spectrum& s, int k) { return std::exp(log_gap_ratio(s, k)); }

bool has_gap(const Spectrum& s, int k, const TolerancePolicy& tol) {
  return log_gap_ratio(s, k) > std::log1p(tol.gap_tie_tol);
}

Vector singular_values(const Matrix& a) {
  if (a.size() == 0) return Vector(0);
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues();
}

int rank_tol(const Matrix& a, const TolerancePolicy& tol) {
  const Vector s = singular_values(a);
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol.rank_rel_tol * s(0)) ++r;
  return r;
}

double ScaledMatrix::log_scale() const { return static_cast<double>(exp2) * kLn2; }

Matrix ScaledMatrix::value() const {
  const long e = exp2;
  return mantissa.unaryExpr([e](double x) { return std::ldexp(x, static_cast<int>(e)); });
}

ScaledMatrix chain_product(const std::vector<const Matrix*>& factors) {
  if (factors.empty()) fail(ErrorCode::DimMismatch, "empty chain has no dimension");
  ScaledMatrix s;
  s.mantissa = *factors.front();
  rescale(s);
  for (size_t i = 1; i < factors.size(); ++i) {
    if (factors[i]->rows() != s.mantissa.cols()) fail(ErrorCode::DimMismatch, "chain factor sizes differ");
    s.mantissa = s.mantissa * (*factors[i]);
    rescale(s);
  }
  return s;
}

namespace {

// Real basis for the eigenvectors at the given sorted positions; complex
// eigenvalues contribute real and imaginary parts.
Matrix eigen_directions(const Matrix& m, int count, bool& ok) {
  const int d = static_cast<int>(m.rows());
  Eigen::EigenSolver<Matrix> es(m, true);
  ok = es.info() == Eigen::Success;
  Matrix cols(d, 0);
  if (!ok) return cols;
  const auto& ev = es.eigenvalues();
  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(ev(a)) > std::abs(ev(b)); });
  std::vector<bool> used(static_cast<size_t>(d), false);
  auto push = [&cols](const Vector& v) {
    cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
    cols.col(cols.cols() - 1) = v;
  };
  for (int p = 0; p < d && cols.cols() < count; ++p) {
    const int i = order[static_cast<size_t>(p)];
    if (used[static_cast<size_t>(i)]) continue;
    used[static_cast<size_t>(i)] = true;
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    if (std::abs(ev(i).imag()) > 1e-14 * std::abs(ev(i))) {
      push(v.real());
      push(v.imag());
      int partner = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int q = p + 1; q < d; ++q) {
        const int j = order[static_cast<size_t>(q)];
        const double dist = std::abs(ev(j) - std::conj(ev(i)));
        if (!used[static_cast<size_t>(j)] && dist < best) {
          best = dist;
          partner = j;
        }
      }
      if (partner >= 0) used[static_cast<size_t>(partner)] = true;
    } else {
      push(v.real());
    }
  }
  return cols;
}

// Extend an orthonormal set by the direction of `target` farthest from it.
void extend_basis(Matrix& q, const Matrix& target) {
  const int d = static_cast<int>(q.rows());
  Matrix r = target - q * (q.transpose() * target);
  Vector v;
  if (r.cols() > 0 && r.norm() > 1e-12) {
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeThinU);
    v = svd.matrixU().col(0);
  } else {
    Matrix c = Matrix::Identity(d, d) - q * q.transpose();
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinU);
    v = svd.matrixU().col(0);
  }
  v -= q * (q.transpose() * v);
  v.normalize();
  q.conservativeResize(Eigen::NoChange, q.cols() + 1);
  q.col(q.cols() - 1) = v;
}

Matrix initial_flag_basis(const ScaledMatrix& fwd, const ScaledMatrix* inv) {
  const int d = static_cast<int>(fwd.mantissa.rows());
  const int h = inv ? (d + 1) / 2 : d;
  bool ok = true;
  Matrix top = eigen_directions(fwd.mantissa, h, ok);
  if (!ok || top.cols() == 0) return Matrix::Identity(d, d);
  Matrix q(d, 0);
  for (int c = 0; c < top.cols() && q.cols() < d; ++c) extend_basis(q, top.col(c));
  if (inv) {
    // The dominant k-plane of the product is the annihilator of the dominant
    // (d-k)-plane of the inverse transpose.
    bool ok2 = true;
    const Matrix dual = eigen_directions(inv->mantissa.transpose(), d, ok2);
    if (ok2 && dual.cols() == d) {
      Eigen::HouseholderQR<Matrix> qr(dual);
      const Matrix y = qr.householderQ() * Matrix::Identity(d, d);
      while (q.cols() < d) {
        const int k = static_cast<int>(q.cols()) + 1;
        extend_basis(q, y.rightCols(k));
      }
    }
  }
  while (q.cols() < d) extend_basis(q, Matrix::Identity(d, d));
  return q;
}

}  // namespace

Subspace ChainEigen::top(int k, const TolerancePolicy& tol) const {
  const int d = spectrum.dim();
  if (k < 1 || k >= d) fail(ErrorCode::IndexOutOfRange, "subspace dimension " + std::to_string(k));
  if (!has_gap(spectrum, k, tol)) fail(ErrorCode::NoGap, "eigenvalue moduli tie at index " + std::to_string(k));
  if (!settled[static_cast<size_t>(k)]) fail(ErrorCode::NotConverged, "dominant subspace did not settle at " + std::to_string(k));
  return Subspace::from_independent(flag_basis.leftCols(k));
}

ChainEigen chain_eigen(const std::vector<const Matrix*>& factors,
                       const std::vector<const Matrix*>& inverse_factors, const TolerancePolicy& tol) {
  (void)tol;
  const ScaledMatrix fwd = chain_product(factors);
  const int d = static_cast<int>(fwd.mantissa.rows());
  if (!(fwd.mantissa.cwiseAbs().maxCoeff() > 0.0) || !fwd.mantissa.allFinite())
    fail(ErrorCode::Singular, "product is zero or not finite");

  // Rough spectrum from the formed products, used for phases and to split
  // clusters of equal moduli.
  std::vector<std::pair<double, std::complex<double>>> rough;
  const auto top = sorted_eigs(fwd.mantissa, fwd.exp2);
  ScaledMatrix inv;
  const bool have_inv = !inverse_factors.empty();
  if (have_inv) {
    inv = chain_product(inverse_factors);
    const auto bottom = sorted_eigs(inv.mantissa, inv.exp2);
    const int h = (d + 1) / 2;
    for (int p = 0; p < h; ++p) rough.emplace_back(top[static_cast<size_t>(p)].log_modulus, top[static_cast<size_t>(p)].value);
    for (int p = h; p < d; ++p) {
      const auto& e = bottom[static_cast<size_t>(d - 1 - p)];
      rough.emplace_back(-e.log_modulus, std::complex<double>(1.0, 0.0) / e.value);
    }
    std::stable_sort(rough.begin(), rough.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  } else {
    for (const auto& e : top) rough.emplace_back(e.log_modulus, e.value);
  }

  // Orthogonal iteration with all d columns through the factors.
  Matrix q = initial_flag_basis(fwd, have_inv ? &inv : nullptr);
  std::vector<double> prefix(static_cast<size_t>(d + 1), 0.0);
  std::vector<double> change(static_cast<size_t>(d + 1), 1.0);
  std::vector<int> stalled(static_cast<size_t>(d + 1), 0);
  double log_det = 0.0;
  for (const Matrix* f : factors) log_det += signed_log_det_abs(*f);
  // Rounding in f * q perturbs column k by about eps * s_1(f) / s_k(f)
  // relative to its size, which bounds how far each piece can settle.
  std::vector<double> floor(static_cast<size_t>(d + 1), 0.0);
  {
    std::vector<const Matrix*> seen;
    for (const Matrix* f : factors) {
      if (std::find(seen.begin(), seen.end(), f) != seen.end()) continue;
      seen.push_back(f);
      const long copies = std::count(factors.begin(), factors.end(), f);
      const Vector sv = singular_values(*f);
      for (int k = 1; k < d; ++k)
        floor[static_cast<size_t>(k)] += copies * std::numeric_limits<double>::epsilon() * sv(0) / sv(k - 1);
    }
  }
  ChainEigen out;
  out.settled.assign(static_cast<size_t>(d + 1), false);
  constexpr int kMaxSweeps = 80;
  constexpr double kSettled = 1e-13;
  for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    const Matrix q_old = q;
    std::vector<double> logdiag(static_cast<size_t>(d), 0.0);
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
      Eigen::HouseholderQR<Matrix> qr(**it * q);
      const Matrix& r = qr.matrixQR();
      for (int i = 0; i < d; ++i) logdiag[static_cast<size_t>(i)] += std::log(std::abs(r(i, i)));
      q = qr.householderQ() * Matrix::Identity(d, d);
    }
    out.sweeps = sweep;
    bool all_done = true;
    bool any_progress = false;
    double acc = 0.0;
    for (int k = 1; k < d; ++k) {
      acc += logdiag[static_cast<size_t>(k - 1)];
      prefix[static_cast<size_t>(k)] = acc;
      const Matrix qn = q.leftCols(k);
      const Matrix qo = q_old.leftCols(k);
      const double c = (qn - qo * (qo.transpose() * qn)).norm();
      if (c < std::max(kSettled, 10.0 * floor[static_cast<size_t>(k)])) {
        out.settled[static_cast<size_t>(k)] = true;
      } else {
        out.settled[static_cast<size_t>(k)] = false;
        all_done = false;
        if (c < 0.5 * change[static_cast<size_t>(k)]) {
          stalled[static_cast<size_t>(k)] = 0;
          any_progress = true;
        } else if (++stalled[static_cast<size_t>(k)] < 4) {
          any_progress = true;
        }
      }
      change[static_cast<size_t>(k)] = c;
    }
    if (all_done || !any_progress) break;
  }
  // Stagnation at the rounding floor still counts as settled.
  for (int k = 1; k < d; ++k)
    out.settled[static_cast<size_t>(k)] =
        change[static_cast<size_t>(k)] < std::max(1e-10, 100.0 * floor[static_cast<size_t>(k)]);
  out.settled[0] = out.settled[static_cast<size_t>(d)] = true;
  prefix[0] = 0.0;
  prefix[static_cast<size_t>(d)] = log_det;

  // Moduli: exact differences across settled indices; inside an unsettled
  // cluster distribute the total using the rough values.
  std::vector<double> lm(static_cast<size_t>(d));
  int a = 0;
  for (int b = 1; b <= d; ++b) {
    if (!out.settled[static_cast<size_t>(b)]) continue;
    const double total = prefix[static_cast<size_t>(b)] - prefix[static_cast<size_t>(a)];
    double rough_sum = 0.0;
    for (int i = a; i < b; ++i) rough_sum += rough[static_cast<size_t>(i)].first;
    const double shift = (total - rough_sum) / (b - a);
    for (int i = a; i < b; ++i) lm[static_cast<size_t>(i)] = (b - a == 1) ? total : rough[static_cast<size_t>(i)].first + shift;
    a = b;
  }
  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return lm[static_cast<size_t>(x)] > lm[static_cast<size_t>(y)]; });
  for (int p = 0; p < d; ++p) {
    const int i = order[static_cast<size_t>(p)];
    out.spectrum.log_moduli.push_back(lm[static_cast<size_t>(i)]);
    out.spectrum.values.push_back(rebuild_value(rough[static_cast<size_t>(i)].second, lm[static_cast<size_t>(i)]));
  }
  out.flag_basis = std::move(q);
  return out;
}

Spectrum chain_spectrum(const std::vector<const Matrix*>& factors,
                        const std::vector<const Matrix*>& inverse_factors, const TolerancePolicy& tol) {
  return chain_eigen(factors, inverse_factors, tol).spectrum;
}

Subspace chain_dominant_subspace(const std::vector<const Matrix*>& factors, int k, const Spectrum& spec,
                                 const TolerancePolicy& tol) {
  const ScaledMatrix prod = chain_product(factors);
  const int d = static_cast<int>(prod.mantissa.rows());
  if (spec.dim() != d) fail(ErrorCode::DimMismatch, "spectrum size differs from matrix size");
  if (k < 1 || k >= d) fail(ErrorCode::IndexOutOfRange, "subspace dimension " + std::to_string(k));
  if (!has_gap(spec, k, tol)) fail(ErrorCode::NoGap, "eigenvalue moduli tie at index " + std::to_string(k));

  // Initial guess from eigenvectors of the formed product.
  Eigen::EigenSolver<Matrix> es(prod.mantissa, true);
  if (es.info() != Eigen::Success) fail(ErrorCode::NotConverged, "eigenvector iteration failed");
  const auto& ev = es.eigenvalues();
  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(ev(a)) > std::abs(ev(b)); });
  Matrix guess(d, 0);
  auto push_col = [&guess](const Vector& v) {
    guess.conservativeResize(Eigen::NoChange, guess.cols() + 1);
    guess.col(guess.cols() - 1) = v;
  };
  std::vector<bool> used(static_cast<size_t>(d), false);
  for (int p = 0; p < k; ++p) {
    const int i = order[static_cast<size_t>(p)];
    if (used[static_cast<size_t>(i)]) continue;
    used[static_cast<size_t>(i)] = true;
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    if (std::abs(ev(i).imag()) > 1e-14 * std::abs(ev(i))) {
      push_col(v.real());
      push_col(v.imag());
      // Mark the conjugate partner, which spans the same real plane.
      int partner = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int q2 = p + 1; q2 < d; ++q2) {
        const int j = order[static_cast<size_t>(q2)];
        const double dist = std::abs(ev(j) - std::conj(ev(i)));
        if (!used[static_cast<size_t>(j)] && dist < best) {
          best = dist;
          partner = j;
        }
      }
      if (partner >= 0) used[static_cast<size_t>(partner)] = true;
    } else {
      push_col(v.real());
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> cp(guess);
  Matrix q = (cp.householderQ() * Matrix::Identity(d, d)).leftCols(k);

  const double lg = log_gap_ratio(spec, k);
  const int max_sweeps = std::clamp(static_cast<int>(std::ceil(40.0 / lg)) + 4, 8, 400);
  double change = 1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Matrix z = q;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) z = thin_q(**it * z);
    change = (z - q * (q.transpose() * z)).norm();
    q = std::move(z);
    if (change < 1e-15) break;
  }
  if (!(change < 1e-9))
    fail(ErrorCode::NotConverged, "orthogonal iteration stalled, change " + std::to_string(change));
  return Subspace::from_independent(q);
}

Subspace invariant_subspace_top(const Matrix& m, int k, const TolerancePolicy& tol) {
  const Spectrum s = eig_sorted(m, tol);
  return chain_dominant_subspace({&m}, k, s, tol);
}

}  // namespace kpos
