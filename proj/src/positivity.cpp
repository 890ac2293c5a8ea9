#include "kpos/positivity.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "kpos/grassmann.hpp"

namespace kpos {

namespace {

constexpr int kMaxMinorDim = 8;

std::vector<MinorIndex> build_minors(int d) {
  std::vector<MinorIndex> out;
  for (int k = 1; k <= d; ++k) {
    const auto subsets = lex_subsets(d, k);
    for (const auto& r : subsets)
      for (const auto& c : subsets) {
        bool ok = true;
        for (int l = 0; l < k && ok; ++l) ok = r[static_cast<size_t>(l)] <= c[static_cast<size_t>(l)];
        if (ok) out.push_back({r, c});
      }
  }
  return out;
}

const std::vector<MinorIndex>& cached_minors(int d) {
  static const std::array<std::vector<MinorIndex>, kMaxMinorDim + 1> table = [] {
    std::array<std::vector<MinorIndex>, kMaxMinorDim + 1> t;
    for (int d = 2; d <= kMaxMinorDim; ++d) t[static_cast<size_t>(d)] = build_minors(d);
    return t;
  }();
  return table[static_cast<size_t>(d)];
}

std::uint32_t index_mask(const std::vector<int>& idx) {
  std::uint32_t m = 0;
  for (int i : idx) m |= 1u << (i - 1);
  return m;
}

std::vector<int> zero_based(const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  std::transform(idx.begin(), idx.end(), out.begin(), [](int i) { return i - 1; });
  return out;
}

struct MinorEntry {
  int factor;
  int minor;
  int sign;  // after evaluation, before torus; 0 = zero or undecided
  bool exact_zero;
  double value;
  double rel;
  std::uint32_t flip_mask;
};

// Row norms of the full matrix bound every minor drawn from those rows.
template <class T>
std::vector<double> row_norms(const DenseMat<T>& u) {
  std::vector<double> out(static_cast<size_t>(u.rows()), 0.0);
  if constexpr (std::is_floating_point_v<T>) {
    for (int i = 0; i < u.rows(); ++i) {
      double r = 0.0;
      for (int j = 0; j < u.cols(); ++j) r += u(i, j) * u(i, j);
      out[static_cast<size_t>(i)] = std::sqrt(r);
    }
  }
  return out;
}

template <class T>
MinorEntry evaluate_minor(const DenseMat<T>& u, const std::vector<double>& norms, const MinorIndex& m, int factor,
                          int minor, double guard) {
  const DenseMat<T> sub = u.submatrix(zero_based(m.rows), zero_based(m.cols));
  const T v = determinant(sub);
  MinorEntry e{factor, minor, sign_of(v), false, 0.0, 0.0, index_mask(m.rows) ^ index_mask(m.cols)};
  if constexpr (std::is_floating_point_v<T>) {
    double scale = 1.0;
    for (int i : m.rows) scale *= norms[static_cast<size_t>(i - 1)];
    e.value = v;
    e.rel = scale > 0.0 ? std::abs(v) / scale : 0.0;
    e.exact_zero = (v == 0.0);
    if (e.rel < guard) e.sign = 0;
  } else {
    e.value = v.get_d();
    e.rel = std::abs(e.value);
    e.exact_zero = (e.sign == 0);
  }
  return e;
}

template <class T>
PositivityVerdict chain_impl(const std::vector<UnipotentCoords<T>>& chain, double guard) {
  PositivityVerdict out;
  if (chain.empty()) {
    out.status = PosStatus::Positive;
    return out;
  }
  const int d = chain.front().dim();
  if (d < 2 || d > kMaxMinorDim) fail(ErrorCode::DimTooLarge, "minor enumeration supports 2 <= d <= 8");
  const auto& minors = cached_minors(d);
  std::vector<MinorEntry> entries;
  entries.reserve(chain.size() * minors.size());
  for (size_t f = 0; f < chain.size(); ++f) {
    if (chain[f].dim() != d) fail(ErrorCode::DimMismatch, "chain factors of different sizes");
    const auto norms = row_norms(chain[f].u);
    for (size_t m = 0; m < minors.size(); ++m)
      entries.push_back(evaluate_minor(chain[f].u, norms, minors[m], static_cast<int>(f), static_cast<int>(m), guard));
  }

  // t_1 = +1 fixes the overall sign; bit i of `neg` flips coordinate i+1.
  long best_neg = std::numeric_limits<long>::max();
  std::uint32_t best_torus = 0;
  bool any_indeterminate = false;
  std::uint32_t indeterminate_torus = 0;
  for (std::uint32_t t = 0; t < (1u << (d - 1)); ++t) {
    const std::uint32_t neg = t << 1;
    long n_neg = 0;
    long n_undecided = 0;
    for (const auto& e : entries) {
      if (e.exact_zero) {
        ++n_neg;
        continue;
      }
      if (e.sign == 0) {
        ++n_undecided;
        continue;
      }
      const int s = (std::popcount(e.flip_mask & neg) & 1) ? -e.sign : e.sign;
      if (s < 0) ++n_neg;
    }
    if (n_neg == 0 && n_undecided == 0) {
      out.status = PosStatus::Positive;
      out.torus.assign(static_cast<size_t>(d), 1);
      for (int i = 0; i < d; ++i)
        if (neg & (1u << i)) out.torus[static_cast<size_t>(i)] = -1;
      out.min_rel_minor = std::numeric_limits<double>::infinity();
      for (const auto& e : entries) out.min_rel_minor = std::min(out.min_rel_minor, e.rel);
      return out;
    }
    if (n_neg == 0 && !any_indeterminate) {
      any_indeterminate = true;
      indeterminate_torus = neg;
    }
    if (n_neg < best_neg) {
      best_neg = n_neg;
      best_torus = neg;
    }
  }

  const std::uint32_t neg = any_indeterminate ? indeterminate_torus : best_torus;
  out.status = any_indeterminate ? PosStatus::Indeterminate : PosStatus::Negative;
  out.torus.assign(static_cast<size_t>(d), 1);
  for (int i = 0; i < d; ++i)
    if (neg & (1u << i)) out.torus[static_cast<size_t>(i)] = -1;
  for (const auto& e : entries) {
    const int s = (std::popcount(e.flip_mask & neg) & 1) ? -e.sign : e.sign;
    const bool hit = any_indeterminate ? (e.sign == 0) : (e.exact_zero || s < 0);
    if (!hit) continue;
    out.factor = e.factor;
    out.minor = minors[static_cast<size_t>(e.minor)];
    out.value = (std::popcount(e.flip_mask & neg) & 1) ? -e.value : e.value;
    out.note = any_indeterminate ? "minor inside guard band"
                                 : (e.exact_zero ? "minor vanishes" : "negative minor for every sign torus");
    break;
  }
  return out;
}

}  // namespace

std::string MinorIndex::to_string() const {
  std::ostringstream os;
  os << "rows{";
  for (size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << rows[i];
  os << "} cols{";
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "}";
  return os.str();
}

std::vector<MinorIndex> nonvanishing_minors(int d) {
  if (d < 2 || d > kMaxMinorDim) fail(ErrorCode::DimTooLarge, "minor enumeration supports 2 <= d <= 8");
  return cached_minors(d);
}

template <class T>
UnipotentCoords<T> UnipotentCoords<T>::from(DenseMat<T> m) {
  if (m.rows() != m.cols()) fail(ErrorCode::NotUnipotent, "not square");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j <= i; ++j) {
      const T want = (i == j) ? T(1) : T(0);
      if (m(i, j) != want) fail(ErrorCode::NotUnipotent, "not unit upper-triangular");
    }
  return UnipotentCoords<T>{std::move(m)};
}

template <class T>
UnipotentCoords<T> UnipotentCoords<T>::inverse() const {
  const int n = dim();
  DenseMat<T> inv = DenseMat<T>::identity(n);
  // Solve u * inv = I column by column, bottom up.
  for (int c = 0; c < n; ++c)
    for (int i = c - 1; i >= 0; --i) {
      T s(0);
      for (int k = i + 1; k <= c; ++k) s += u(i, k) * inv(k, c);
      inv(i, c) = -s;
    }
  return UnipotentCoords<T>{std::move(inv)};
}

template struct UnipotentCoords<double>;
template struct UnipotentCoords<Rational>;

UnipotentF to_unipotent(const Matrix& m) {
  DenseMat<double> d(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) d(i, j) = m(i, j);
  return UnipotentF::from(std::move(d));
}

Matrix to_matrix(const UnipotentF& u) {
  Matrix m(u.dim(), u.dim());
  for (int i = 0; i < u.dim(); ++i)
    for (int j = 0; j < u.dim(); ++j) m(i, j) = u.u(i, j);
  return m;
}

UnipotentF to_float(const UnipotentQ& u) {
  DenseMat<double> d(u.dim(), u.dim());
  for (int i = 0; i < u.dim(); ++i)
    for (int j = 0; j < u.dim(); ++j) d(i, j) = u.u(i, j).get_d();
  return UnipotentF{std::move(d)};
}

PositivityVerdict is_totally_positive(const UnipotentF& u, double guard) { return chain_impl<double>({u}, guard); }
PositivityVerdict is_totally_positive(const UnipotentQ& u) { return chain_impl<Rational>({u}, 0.0); }
PositivityVerdict chain_totally_positive(const std::vector<UnipotentF>& chain, double guard) {
  return chain_impl<double>(chain, guard);
}
PositivityVerdict chain_totally_positive(const std::vector<UnipotentQ>& chain) { return chain_impl<Rational>(chain, 0.0); }

Matrix adapted_frame(const Flag& x, const Flag& z, const TolerancePolicy& tol) {
  const int d = x.ambient_dim();
  if (!x.is_full() || !z.is_full() || z.ambient_dim() != d) fail(ErrorCode::DimMismatch, "adapted frame needs full flags");
  for (int j = 1; j < d; ++j)
    if (!transverse(x.piece(j), z.piece(d - j), tol))
      fail(ErrorCode::NotTransverse, "flags not transverse at index " + std::to_string(j));
  Matrix h(d, d);
  for (int i = 1; i <= d; ++i) {
    Vector v;
    if (i == 1) {
      v = z.piece(1).basis().col(0);
    } else if (i == d) {
      v = x.piece(1).basis().col(0);
    } else {
      const Subspace line = meet(x.piece(d - i + 1), z.piece(i), tol);
      if (line.dim() != 1) fail(ErrorCode::NotTransverse, "frame line at index " + std::to_string(i));
      v = line.basis().col(0);
    }
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0) v = -v;
    h.col(i - 1) = v.normalized();
  }
  return h.inverse();
}

UnipotentF unipotent_factor(const Flag& f, const Matrix& frame, const TolerancePolicy& tol) {
  const int d = f.ambient_dim();
  if (!f.is_full() || frame.rows() != d) fail(ErrorCode::DimMismatch, "unipotent factor needs a full flag");
  DenseMat<double> u = DenseMat<double>::identity(d);
  for (int j = 1; j < d; ++j) {
    const int c = d - j;  // 0-based column index of e_{d-j+1}
    const Matrix b = frame * f.piece(j).basis();
    const Matrix a = b.bottomRows(j);
    const Vector s = singular_values(a);
    if (!(s(s.size() - 1) > tol.rank_rel_tol * s(0)))
      fail(ErrorCode::NotTransverse, "flag meets the opposite flag at index " + std::to_string(j));
    Vector rhs = Vector::Zero(j);
    rhs(0) = 1.0;
    const Vector coeff = a.partialPivLu().solve(rhs);
    const Vector col = b * coeff;
    for (int r = 0; r < c; ++r) u(r, c) = col(r);
  }
  return UnipotentF{std::move(u)};
}

PositivityVerdict triple_positive(const Flag& x, const Flag& y, const Flag& z, const TolerancePolicy& tol,
                                  double guard) {
  return tuple_positive({x, y, z}, tol, guard);
}

PositivityVerdict tuple_positive(const std::vector<Flag>& flags, const TolerancePolicy& tol, double guard) {
  if (flags.size() < 3) fail(ErrorCode::DimMismatch, "a positive tuple needs at least three flags");
  const int d = flags.front().ambient_dim();
  auto require_transverse = [&](size_t a, size_t b) {
    for (int j = 1; j < d; ++j)
      if (!transverse(flags[a].piece(j), flags[b].piece(d - j), tol))
        fail(ErrorCode::NotTransverse, "flags " + std::to_string(a) + " and " + std::to_string(b) +
                                           " not transverse at index " + std::to_string(j));
  };
  for (size_t i = 0; i + 1 < flags.size(); ++i) require_transverse(i, i + 1);
  require_transverse(0, flags.size() - 1);
  const Matrix g = adapted_frame(flags.front(), flags.back(), tol);
  std::vector<UnipotentF> us;
  for (size_t i = 1; i + 1 < flags.size(); ++i) us.push_back(unipotent_factor(flags[i], g, tol));
  std::vector<UnipotentF> chain;
  chain.push_back(us.front());
  for (size_t i = 1; i < us.size(); ++i) chain.push_back(UnipotentF{(us[i - 1].inverse().u * us[i].u)});
  return chain_totally_positive(chain, guard);
}

CurveVerdict curve_positive(std::vector<CurvePoint> samples, int n_max, long cap, std::uint64_t seed,
                            const TolerancePolicy& tol, double guard) {
  const int m = static_cast<int>(samples.size());
  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return samples[static_cast<size_t>(a)].angle < samples[static_cast<size_t>(b)].angle; });
  for (int i = 1; i < m; ++i)
    if (std::abs(samples[static_cast<size_t>(order[static_cast<size_t>(i)])].angle -
                 samples[static_cast<size_t>(order[static_cast<size_t>(i - 1)])].angle) < 1e-12)
      fail(ErrorCode::DegenerateAngles, "curve samples share an angle");

  std::vector<std::vector<int>> tuples;
  for (int n = 3; n <= std::min(n_max, m); ++n)
    for (const auto& s : lex_subsets(m, n)) {
      std::vector<int> t;
      for (int i : s) t.push_back(order[static_cast<size_t>(i - 1)]);
      tuples.push_back(std::move(t));
    }
  if (cap > 0 && static_cast<long>(tuples.size()) > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(tuples.begin(), tuples.end(), rng);
    tuples.resize(static_cast<size_t>(cap));
    std::sort(tuples.begin(), tuples.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
  }

  CurveVerdict out;
  out.verdict.status = PosStatus::Positive;
  out.min_rel_minor = std::numeric_limits<double>::infinity();
  bool have_witness = false;
  for (const auto& t : tuples) {
    std::vector<Flag> flags;
    for (int i : t) flags.push_back(samples[static_cast<size_t>(i)].flag);
    ++out.tuples_tested;
    const PositivityVerdict v = tuple_positive(flags, tol, guard);
    if (v.positive()) {
      out.min_rel_minor = std::min(out.min_rel_minor, v.min_rel_minor);
      continue;
    }
    if (v.status == PosStatus::Negative) ++out.negative;
    else ++out.indeterminate;
    const bool replace = !have_witness || (v.status == PosStatus::Negative && out.verdict.status != PosStatus::Negative);
    if (replace) {
      out.verdict = v;
      out.tuple = t;
      have_witness = true;
    }
  }
  if (out.tuples_tested == 0) out.min_rel_minor = 0.0;
  return out;
}

}  // namespace kpos
