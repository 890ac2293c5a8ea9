#include "kpos/reps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kpos/grassmann.hpp"
#include "kpos/parallel.hpp"

namespace kpos {

namespace {

constexpr double kDedupTol = 1e-10;

template <class T>
std::vector<T> poly_mul(const std::vector<T>& p, const std::vector<T>& q) {
  std::vector<T> r(p.size() + q.size() - 1, T(0));
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

template <class T>
std::vector<T> poly_pow(const std::vector<T>& p, int n) {
  std::vector<T> r{T(1)};
  for (int i = 0; i < n; ++i) r = poly_mul(r, p);
  return r;
}

Matrix block(const Matrix& m, int start, int size) { return m.block(start, start, size, size); }

bool invertible(const Matrix& m) {
  const Vector s = singular_values(m);
  return s.size() > 0 && s(s.size() - 1) > 1e-14 * s(0);
}

}  // namespace

template <class T>
DenseMat<T> tau_power(int d, const T& a, const T& b, const T& c, const T& e) {
  if (d < 1) fail(ErrorCode::DimMismatch, "tau dimension must be positive");
  DenseMat<T> out(d, d);
  // Column i: (a x + c y)^{d-1-i} (b x + e y)^i, coefficient r of x^{d-1-r} y^r.
  const std::vector<T> first{a, c}, second{b, e};
  for (int i = 0; i < d; ++i) {
    const std::vector<T> col = poly_mul(poly_pow(first, d - 1 - i), poly_pow(second, i));
    for (int r = 0; r < d; ++r) out(r, i) = col[static_cast<size_t>(r)];
  }
  return out;
}

template DenseMat<double> tau_power<double>(int, const double&, const double&, const double&, const double&);
template DenseMat<Rational> tau_power<Rational>(int, const Rational&, const Rational&, const Rational&,
                                                const Rational&);

Matrix tau_irr(int d, const Mat2& m, double tol) {
  if (std::abs(m.determinant() - 1.0) >= tol) fail(ErrorCode::NotUnimodular, "det must be 1");
  const DenseMat<double> t = tau_power<double>(d, m(0, 0), m(0, 1), m(1, 0), m(1, 1));
  Matrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = t(i, j);
  return out;
}

double rep_relation_residual(const MarkedRep& r) {
  if (r.group().kind() == MarkedGroup::Kind::Free) return 0.0;
  // Compare the two halves P and Q^-1 of the relator PQ instead of forming
  // PQ: the cancellation in the full product would dominate the residual.
  const Word& rel = r.group().relator();
  const auto half = rel.letters.begin() + static_cast<long>(rel.letters.size() / 2);
  const Word p{std::vector<int>(rel.letters.begin(), half)};
  const Word q{std::vector<int>(half, rel.letters.end())};
  const Matrix a = evaluate_scaled(r, p).mantissa;
  const Matrix b = evaluate_scaled(r, q.inverse()).mantissa;
  const double alpha = (a.array() * b.array()).sum() / b.squaredNorm();
  return (a - alpha * b).norm() / a.norm();
}

MarkedRep make_rep(Holonomy2 hol, std::vector<Matrix> generators, std::string label, std::vector<int> blocks) {
  if (static_cast<int>(generators.size()) != hol.group.generator_count())
    fail(ErrorCode::DimMismatch, "expected " + std::to_string(hol.group.generator_count()) + " generators");
  if (generators.empty()) fail(ErrorCode::DimMismatch, "no generators");
  MarkedRep r;
  r.holonomy = std::move(hol);
  r.dim = static_cast<int>(generators.front().rows());
  for (size_t i = 0; i < generators.size(); ++i) {
    const Matrix& g = generators[i];
    if (g.rows() != r.dim || g.cols() != r.dim)
      fail(ErrorCode::DimMismatch, "generator " + std::to_string(i + 1) + " has the wrong size");
    if (!g.allFinite() || !invertible(g))
      fail(ErrorCode::Singular, "generator " + std::to_string(i + 1) + " is not invertible");
    r.inverses.push_back(g.inverse());
  }
  r.generators = std::move(generators);
  r.label = std::move(label);
  r.blocks = blocks.empty() ? std::vector<int>{r.dim} : std::move(blocks);
  if (std::accumulate(r.blocks.begin(), r.blocks.end(), 0) != r.dim)
    fail(ErrorCode::DimMismatch, "block sizes do not add up to the dimension");
  for (const Matrix& g : r.generators) {
    int at = 0;
    for (int b : r.blocks) {
      const double off = g.block(at, 0, b, at).norm() + g.block(at, at + b, b, r.dim - at - b).norm();
      if (off != 0.0) fail(ErrorCode::NotBlockDiagonal, "generator leaves a declared block");
      at += b;
    }
  }
  const double res = rep_relation_residual(r);
  if (!(res < 1e-6)) fail(ErrorCode::NotHomomorphism, "relator residual " + std::to_string(res));
  return r;
}

MarkedRep fuchsian_rep(const std::vector<int>& multiindex, const Holonomy2& hol) {
  if (multiindex.empty()) fail(ErrorCode::ConfigError, "empty multiindex");
  for (size_t i = 0; i < multiindex.size(); ++i) {
    if (multiindex[i] < 1) fail(ErrorCode::ConfigError, "multiindex entries must be positive");
    if (i > 0 && multiindex[i] > multiindex[i - 1]) fail(ErrorCode::ConfigError, "multiindex must be non-increasing");
  }
  const int d = std::accumulate(multiindex.begin(), multiindex.end(), 0);
  std::vector<Matrix> gens;
  for (const Mat2& g : hol.generators) {
    Matrix m = Matrix::Zero(d, d);
    int at = 0;
    for (int di : multiindex) {
      m.block(at, at, di, di) = tau_irr(di, g);
      at += di;
    }
    gens.push_back(std::move(m));
  }
  std::string label = "tau(";
  for (size_t i = 0; i < multiindex.size(); ++i) label += (i ? "," : "") + std::to_string(multiindex[i]);
  return make_rep(hol, std::move(gens), label + ")", multiindex);
}

MarkedRep dual_rep(const MarkedRep& r) {
  MarkedRep out = r;
  for (size_t i = 0; i < r.generators.size(); ++i) {
    out.generators[i] = r.inverses[i].transpose();
    out.inverses[i] = r.generators[i].transpose();
  }
  out.label = "dual(" + r.label + ")";
  return out;
}

MarkedRep ext_power_rep(const MarkedRep& r, int k) {
  if (k < 1 || k > r.dim) fail(ErrorCode::IndexOutOfRange, "exterior power index");
  MarkedRep out = r;
  for (size_t i = 0; i < r.generators.size(); ++i) {
    out.generators[i] = ext_power_matrix(r.generators[i], k);
    out.inverses[i] = ext_power_matrix(r.inverses[i], k);
  }
  out.dim = static_cast<int>(out.generators.front().rows());
  out.blocks = {out.dim};
  out.label = "wedge" + std::to_string(k) + "(" + r.label + ")";
  return out;
}

MarkedRep direct_sum(const MarkedRep& a, const MarkedRep& b) {
  if (a.generators.size() != b.generators.size()) fail(ErrorCode::DimMismatch, "groups differ");
  const int d = a.dim + b.dim;
  std::vector<Matrix> gens;
  for (size_t i = 0; i < a.generators.size(); ++i) {
    Matrix m = Matrix::Zero(d, d);
    m.topLeftCorner(a.dim, a.dim) = a.generators[i];
    m.bottomRightCorner(b.dim, b.dim) = b.generators[i];
    gens.push_back(std::move(m));
  }
  std::vector<int> blocks = a.blocks;
  blocks.insert(blocks.end(), b.blocks.begin(), b.blocks.end());
  return make_rep(a.holonomy, std::move(gens), a.label + "+" + b.label, blocks);
}

std::vector<const Matrix*> word_factors(const MarkedRep& r, const Word& w) {
  std::vector<const Matrix*> f;
  f.reserve(w.letters.size());
  for (int l : w.letters) {
    const size_t i = static_cast<size_t>(std::abs(l) - 1);
    if (i >= r.generators.size()) fail(ErrorCode::IndexOutOfRange, "letter out of range");
    f.push_back(l > 0 ? &r.generators[i] : &r.inverses[i]);
  }
  return f;
}

std::vector<const Matrix*> inverse_word_factors(const MarkedRep& r, const Word& w) {
  return word_factors(r, w.inverse());
}

ScaledMatrix evaluate_scaled(const MarkedRep& r, const Word& w) {
  if (w.empty()) return ScaledMatrix{Matrix::Identity(r.dim, r.dim), 0};
  return chain_product(word_factors(r, w));
}

Matrix evaluate(const MarkedRep& r, const Word& w) { return evaluate_scaled(r, w).value(); }

std::vector<bool> first_of_each_angle(const std::vector<double>& angles) {
  std::vector<size_t> order(angles.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return angles[a] != angles[b] ? angles[a] < angles[b] : a < b;
  });
  std::vector<bool> keep(angles.size(), false);
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i, best = order[i];
    while (j + 1 < order.size() && angles[order[j + 1]] - angles[order[j]] < kDedupTol) best = std::min(best, order[++j]);
    keep[best] = true;
    i = j + 1;
  }
  // A cluster straddling angle 0 shows up at both ends.
  if (order.size() > 1) {
    size_t lo = 0;
    while (lo < order.size() && !keep[order[lo]]) ++lo;
    size_t hi = order.size() - 1;
    while (hi > 0 && !keep[order[hi]]) --hi;
    if (lo < hi && circle_distance(angles[order[lo]], angles[order[hi]]) < kDedupTol)
      keep[std::max(order[lo], order[hi])] = false;
  }
  return keep;
}

std::vector<Word> boundary_words(const Holonomy2& hol, int L) {
  std::vector<Word> out;
  std::vector<double> angles;
  for (const Word& w : enumerate_words(hol.group, L)) {
    const Mat2 m = hol.evaluate(w);
    if (!is_hyperbolic(m)) continue;
    out.push_back(w);
    angles.push_back(fixed_points(m).first);
  }
  const std::vector<bool> keep = first_of_each_angle(angles);
  std::vector<Word> unique;
  for (size_t k = 0; k < out.size(); ++k)
    if (keep[k]) unique.push_back(out[k]);
  return unique;
}

namespace {

ChainEigen cyclic_word_eigen(const MarkedRep& r, const Word& w, const TolerancePolicy& tol) {
  if (r.blocks.size() < 2) return chain_eigen(word_factors(r, w), inverse_word_factors(r, w), tol);

  struct Label {
    double log;
    size_t block;
    int index;
  };
  std::vector<ChainEigen> parts;
  std::vector<Label> labels;
  int at = 0;
  for (size_t b = 0; b < r.blocks.size(); ++b) {
    const int size = r.blocks[b];
    std::vector<Matrix> g, gi;
    for (size_t i = 0; i < r.generators.size(); ++i) {
      g.push_back(block(r.generators[i], at, size));
      gi.push_back(block(r.inverses[i], at, size));
    }
    std::vector<const Matrix*> fwd, inv;
    for (int l : w.letters) fwd.push_back(l > 0 ? &g[static_cast<size_t>(l - 1)] : &gi[static_cast<size_t>(-l - 1)]);
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
      inv.push_back(*it > 0 ? &gi[static_cast<size_t>(*it - 1)] : &g[static_cast<size_t>(-*it - 1)]);
    if (size == 1) {
      ChainEigen one;
      const ScaledMatrix p = chain_product(fwd);
      const double v = p.mantissa(0, 0);
      one.spectrum.values = {v};
      one.spectrum.log_moduli = {std::log(std::abs(v)) + p.exp2 * std::log(2.0)};
      one.flag_basis = Matrix::Identity(1, 1);
      one.settled = {true, true};
      parts.push_back(std::move(one));
    } else {
      parts.push_back(chain_eigen(fwd, inv, tol));
    }
    for (int i = 0; i < size; ++i) labels.push_back({parts.back().spectrum.log_moduli[static_cast<size_t>(i)], b, i});
    at += size;
  }
  std::stable_sort(labels.begin(), labels.end(), [](const Label& a, const Label& b) { return a.log > b.log; });

  ChainEigen out;
  out.flag_basis = Matrix::Zero(r.dim, r.dim);
  out.settled.assign(static_cast<size_t>(r.dim + 1), true);
  std::vector<int> offset(r.blocks.size(), 0), taken(r.blocks.size(), 0);
  for (size_t b = 1; b < r.blocks.size(); ++b) offset[b] = offset[b - 1] + r.blocks[b - 1];
  for (size_t i = 0; i < labels.size(); ++i) {
    const Label& l = labels[i];
    const ChainEigen& p = parts[l.block];
    out.spectrum.values.push_back(p.spectrum.values[static_cast<size_t>(l.index)]);
    out.spectrum.log_moduli.push_back(l.log);
    out.flag_basis.block(offset[l.block], static_cast<long>(i), r.blocks[l.block], 1) = p.flag_basis.col(taken[l.block]);
    ++taken[l.block];
    bool ok = true;
    for (size_t b = 0; b < parts.size(); ++b) ok = ok && parts[b].settled[static_cast<size_t>(taken[b])];
    out.settled[i + 1] = ok;
    out.sweeps = std::max(out.sweeps, p.sweeps);
  }
  return out;
}

}  // namespace

// For w = u v u^-1 the product is badly non-normal, so v is iterated and its
// flag is carried over by u.
ChainEigen word_eigen(const MarkedRep& r, const Word& w, const TolerancePolicy& tol) {
  size_t cut = 0;
  const size_t n = w.letters.size();
  while (2 * cut + 2 <= n && w.letters[cut] == -w.letters[n - 1 - cut]) ++cut;
  if (cut == 0) return cyclic_word_eigen(r, w, tol);
  const Word core{std::vector<int>(w.letters.begin() + static_cast<long>(cut), w.letters.end() - static_cast<long>(cut))};
  ChainEigen out = cyclic_word_eigen(r, core, tol);
  Matrix q = out.flag_basis;
  for (size_t i = cut; i-- > 0;) {
    const Word letter{{w.letters[i]}};
    Eigen::HouseholderQR<Matrix> qr(*word_factors(r, letter).front() * q);
    q = qr.householderQ() * Matrix::Identity(r.dim, r.dim);
  }
  out.flag_basis = std::move(q);
  return out;
}

std::vector<WordDynamics> word_dynamics(const MarkedRep& r, const std::vector<Word>& words,
                                        const TolerancePolicy& tol, int jobs) {
  std::vector<WordDynamics> out(words.size());
  parallel_for(words.size(), jobs, [&](size_t i) {
    WordDynamics& d = out[i];
    d.word = words[i];
    const Mat2 h = r.holonomy.evaluate(d.word);
    d.hyperbolic = is_hyperbolic(h);
    if (!d.hyperbolic) return;
    d.angle = fixed_points(h).first;
    d.eigen = word_eigen(r, d.word, tol);
  });
  return out;
}

SampleSet select_samples(const MarkedRep& r, const std::vector<WordDynamics>& dyn, const std::vector<int>& J,
                         const TolerancePolicy& tol) {
  std::vector<int> needed = J;
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  for (int j : needed)
    if (j < 1 || j >= r.dim) fail(ErrorCode::IndexOutOfRange, "flag index " + std::to_string(j));
  if (needed.empty())
    for (int j = 1; j < r.dim; ++j) needed.push_back(j);

  SampleSet out;
  out.candidates = static_cast<int>(dyn.size());
  for (const WordDynamics& d : dyn) {
    std::string reason;
    if (!d.hyperbolic) reason = error_code_name(ErrorCode::NotHyperbolic);
    for (int j : needed) {
      if (!reason.empty()) break;
      if (!has_gap(d.eigen.spectrum, j, tol))
        reason = std::string(error_code_name(ErrorCode::NoGap)) + " at " + std::to_string(j);
      else if (!d.eigen.settled[static_cast<size_t>(j)])
        reason = std::string(error_code_name(ErrorCode::NotConverged)) + " at " + std::to_string(j);
    }
    if (!reason.empty()) {
      out.skipped.push_back({d.word, reason});
      continue;
    }
    BoundarySample s;
    s.word = d.word;
    s.angle = d.angle;
    s.matrix = evaluate_scaled(r, d.word);
    s.spectrum = d.eigen.spectrum;
    s.flag = Flag::from_frame(d.eigen.flag_basis, needed);
    out.samples.push_back(std::move(s));
  }
  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const BoundarySample& a, const BoundarySample& b) { return a.angle < b.angle; });
  return out;
}

SampleSet boundary_flag_samples(const MarkedRep& r, const std::vector<Word>& words, const std::vector<int>& J,
                                const TolerancePolicy& tol, int jobs) {
  return select_samples(r, word_dynamics(r, words, tol, jobs), J, tol);
}

SampleSet boundary_flag_samples(const MarkedRep& r, int L, const std::vector<int>& J, const TolerancePolicy& tol,
                                int jobs) {
  return boundary_flag_samples(r, boundary_words(r.holonomy, L), J, tol, jobs);
}

std::vector<size_t> spread_subsample(const std::vector<BoundarySample>& samples, size_t m) {
  const size_t n = samples.size();
  if (m >= n) {
    std::vector<size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<size_t> chosen;
  if (m == 0) return chosen;
  size_t first = 0;
  for (size_t i = 1; i < n; ++i)
    if (samples[i].word < samples[first].word) first = i;
  chosen.push_back(first);
  std::vector<double> dist(n);
  for (size_t i = 0; i < n; ++i) dist[i] = circle_distance(samples[i].angle, samples[first].angle);
  while (chosen.size() < m) {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i)
      if (dist[i] > dist[best]) best = i;
    chosen.push_back(best);
    for (size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], circle_distance(samples[i].angle, samples[best].angle));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

double DeformationPath::character(const Word& w) const {
  double c = 0.0;
  for (int l : w.letters) c += (l > 0 ? 1.0 : -1.0) * chi.at(static_cast<size_t>(std::abs(l) - 1));
  return c;
}

DeformationPath make_path(MarkedRep base, int split, std::vector<double> chi) {
  const int d = base.dim;
  if (split < 1 || split >= d) fail(ErrorCode::IndexOutOfRange, "split must lie in 1..d-1");
  if (chi.size() != base.generators.size()) fail(ErrorCode::NotHomomorphism, "character needs one value per generator");
  if (std::all_of(chi.begin(), chi.end(), [](double c) { return c == 0.0; }))
    fail(ErrorCode::NotHomomorphism, "character vanishes on every generator");
  for (const Matrix& g : base.generators) {
    const double off = g.topRightCorner(split, d - split).norm() + g.bottomLeftCorner(d - split, split).norm();
    if (off > 1e-12 * g.norm()) fail(ErrorCode::NotBlockDiagonal, "generator does not preserve the splitting");
  }
  std::vector<int> cuts{0, split, d};
  int at = 0;
  for (int b : base.blocks) cuts.push_back(at += b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  base.blocks.clear();
  for (size_t i = 1; i < cuts.size(); ++i) base.blocks.push_back(cuts[i] - cuts[i - 1]);
  return DeformationPath{std::move(base), split, std::move(chi)};
}

MarkedRep scaling_path(const DeformationPath& path, double t) {
  MarkedRep r = path.base;
  if (t == 0.0) return r;
  const int d = r.dim, s = path.split;
  for (size_t i = 0; i < r.generators.size(); ++i) {
    const double f = std::exp(t * path.chi[i]);
    r.generators[i].bottomRightCorner(d - s, d - s) *= f;
    r.inverses[i].bottomRightCorner(d - s, d - s) /= f;
  }
  r.label = path.base.label + "@t=" + std::to_string(t);
  return r;
}

std::vector<double> TrackedGaps::at(double t) const {
  std::vector<double> g(at_zero.size());
  for (size_t i = 0; i < g.size(); ++i) g[i] = at_zero[i] + t * slope[i];
  return g;
}

TrackedGaps tracked_log_gaps(const DeformationPath& path, const Word& w) {
  const MarkedRep& r = path.base;
  const int d = r.dim, s = path.split;
  std::vector<double> logs;
  std::vector<int> owner;
  for (int part = 0; part < 2; ++part) {
    const int start = part == 0 ? 0 : s, size = part == 0 ? s : d - s;
    std::vector<Matrix> g, gi;
    for (size_t i = 0; i < r.generators.size(); ++i) {
      g.push_back(block(r.generators[i], start, size));
      gi.push_back(block(r.inverses[i], start, size));
    }
    std::vector<const Matrix*> fwd, inv;
    for (int l : w.letters) {
      const size_t i = static_cast<size_t>(std::abs(l) - 1);
      fwd.push_back(l > 0 ? &g[i] : &gi[i]);
    }
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
      const size_t i = static_cast<size_t>(std::abs(*it) - 1);
      inv.push_back(*it > 0 ? &gi[i] : &g[i]);
    }
    const Spectrum sp = w.empty() ? eig_sorted(Matrix::Identity(size, size)) : chain_spectrum(fwd, inv);
    for (double x : sp.log_moduli) {
      logs.push_back(x);
      owner.push_back(part);
    }
  }
  std::vector<size_t> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return logs[a] > logs[b]; });
  const double c = path.character(w);
  TrackedGaps out;
  for (int k = 1; k < d; ++k) {
    const size_t a = order[static_cast<size_t>(k - 1)], b = order[static_cast<size_t>(k)];
    out.at_zero.push_back(logs[a] - logs[b]);
    out.slope.push_back(c * (owner[a] - owner[b]));
  }
  return out;
}

Matrix eps_family(double lambda, int n) {
  if (!(lambda > 1.0) || n < 1) fail(ErrorCode::ConfigError, "eps family needs lambda > 1 and n >= 1");
  const double nn = static_cast<double>(n);
  const double eps = -nn / (lambda * (nn * nn * lambda + 1.0));
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = lambda + 1.0 / (nn * nn);
  m(1, 0) = 1.0 / nn;
  m(1, 1) = lambda;
  m(2, 2) = 1.0 / lambda;
  m(2, 3) = eps;
  m(3, 3) = 1.0 / (lambda + 1.0 / (nn * nn));
  return m;
}

MarkedRep eps_family_rep(double lambda, int n) {
  Mat2 h = Mat2::Zero();
  h(0, 0) = 2.0;
  h(1, 1) = 0.5;
  Holonomy2 hol{MarkedGroup::free(1), {h}, 0.0};
  return make_rep(std::move(hol), {eps_family(lambda, n)},
                  "eps_family(lambda=" + std::to_string(lambda) + ",n=" + std::to_string(n) + ")");
}

}  // namespace kpos
