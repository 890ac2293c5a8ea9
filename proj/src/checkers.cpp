#include "kpos/checkers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "kpos/grassmann.hpp"
#include "kpos/parallel.hpp"
#include "kpos/positivity.hpp"

namespace kpos {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string piece_name(char point, int j) { return std::string(1, point) + "^" + std::to_string(j); }

bool failure_less(const Failure& a, const Failure& b) {
  if (a.words != b.words) return a.words < b.words;
  if (a.what != b.what) return a.what < b.what;
  if (a.angles != b.angles) return a.angles < b.angles;
  return a.value < b.value;
}

void trim_failures(std::vector<Failure>& f) {
  std::sort(f.begin(), f.end(), failure_less);
  if (f.size() > CheckReport::kMaxFailures) f.resize(CheckReport::kMaxFailures);
}

CheckReport new_report(const std::string& property, const CheckContext& ctx, int k) {
  CheckReport r;
  r.property = property;
  const SampleConfig& c = ctx.config();
  r.param("rep", ctx.rep().label);
  r.param("k", std::to_string(k));
  r.param("word_length", std::to_string(c.word_length));
  r.param("seed", std::to_string(c.seed));
  return r;
}

void note_skips(CheckReport& r, const SampleSet& s) {
  std::map<std::string, int> counts;
  for (const auto& sk : s.skipped) ++counts[sk.reason];
  for (const auto& [reason, n] : counts) r.notes.push_back("skipped " + std::to_string(n) + " words: " + reason);
  r.param("boundary_samples", std::to_string(s.samples.size()));
}

void check_index(int d, int k) {
  if (k < 1 || k >= d) fail(ErrorCode::IndexOutOfRange, "index " + std::to_string(k) + " outside 1.." + std::to_string(d - 1));
}

// Runs body(i, report) for each i on local reports and merges them in index order.
template <class F>
void run_parallel(CheckReport& into, size_t n, int jobs, F&& body) {
  std::vector<CheckReport> part(n);
  parallel_for(n, jobs, [&](size_t i) { body(i, part[i]); });
  for (CheckReport& p : part) {
    into.samples_tested += p.samples_tested;
    into.failure_count += p.failure_count;
    into.indeterminate_count += p.indeterminate_count;
    for (Failure& f : p.failures) into.failures.push_back(std::move(f));
    if (into.failures.size() > 4 * CheckReport::kMaxFailures) trim_failures(into.failures);
    for (const auto& [key, v] : p.extremal) {
      if (key.rfind("min_", 0) == 0)
        into.note_min(key, v);
      else if (key.rfind("max_", 0) == 0)
        into.note_max(key, v);
      else
        into.extremal[key] += v;
    }
    for (std::string& n : p.notes) into.notes.push_back(std::move(n));
  }
}

Failure make_failure(std::string what, double value, const std::vector<const BoundarySample*>& pts,
                     const MarkedGroup& group) {
  Failure f;
  f.what = std::move(what);
  f.value = value;
  for (const BoundarySample* p : pts) {
    f.words.push_back(group.to_string(p->word));
    f.angles.push_back(p->angle);
  }
  return f;
}

void add_piece(Failure& f, const std::string& name, const Subspace& s) { f.flags.push_back({name, s.basis()}); }

// Ordered tuples of distinct indices from [0, m), in lexicographic order,
// reduced to a seeded subset of size cap when there are more.
std::vector<std::vector<size_t>> ordered_tuples(size_t m, size_t size, long cap, std::uint64_t seed) {
  std::vector<std::vector<size_t>> out;
  std::vector<size_t> cur;
  std::vector<bool> used(m, false);
  auto rec = [&](auto&& self) -> void {
    if (cur.size() == size) {
      out.push_back(cur);
      return;
    }
    for (size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      used[i] = true;
      cur.push_back(i);
      self(self);
      cur.pop_back();
      used[i] = false;
    }
  };
  rec(rec);
  if (cap > 0 && static_cast<long>(out.size()) > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(static_cast<size_t>(cap));
    std::sort(out.begin(), out.end());
  }
  return out;
}

double log_gap_for(const WordDynamics& d, int k, const GapTracking& tr) {
  if (!tr.path) return log_gap_ratio(d.eigen.spectrum, k);
  if (tr.cache) {
    const auto it = tr.cache->find(d.word.letters);
    if (it != tr.cache->end()) return it->second.at(tr.t)[static_cast<size_t>(k - 1)];
  }
  return tracked_log_gaps(*tr.path, d.word).at(tr.t)[static_cast<size_t>(k - 1)];
}

Subspace coords_in(const Subspace& inner, const Subspace& host) {
  return Subspace::from_independent(host.basis().transpose() * inner.basis());
}

}  // namespace

void SampleConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::ConfigError, what); };
  if (word_length < 1 || word_length > 8) bad("word_length must lie in 1..8");
  if (n_max < 3 || n_max > 5) bad("n_max must lie in 3..5");
  if (max_samples < 3 || pair_samples < 2) bad("too few samples requested");
  if (tuple_cap < 1) bad("tuple_cap must be positive");
  if (jobs < 1) bad("jobs must be positive");
  try {
    tol.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Indeterminate:
      return "indeterminate";
  }
  return "?";
}

void CheckReport::add_failure(Failure f) {
  ++failure_count;
  failures.push_back(std::move(f));
  if (failures.size() > 4 * kMaxFailures) trim_failures(failures);
}

void CheckReport::note_min(const std::string& key, double v) {
  auto it = extremal.find(key);
  if (it == extremal.end())
    extremal.emplace(key, v);
  else
    it->second = std::min(it->second, v);
}

void CheckReport::note_max(const std::string& key, double v) {
  auto it = extremal.find(key);
  if (it == extremal.end())
    extremal.emplace(key, v);
  else
    it->second = std::max(it->second, v);
}

void CheckReport::param(const std::string& key, const std::string& value) {
  for (auto& [k, v] : params)
    if (k == key) {
      v = value;
      return;
    }
  params.emplace_back(key, value);
}

void CheckReport::finalize() {
  trim_failures(failures);
  if (failure_count > 0)
    verdict = Verdict::Fail;
  else if (indeterminate_count > 0 || samples_tested == 0)
    verdict = Verdict::Indeterminate;
  else
    verdict = Verdict::Pass;
}

CheckReport merge(const CheckReport& a, const CheckReport& b) {
  CheckReport out = a;
  out.samples_tested += b.samples_tested;
  out.failure_count += b.failure_count;
  out.indeterminate_count += b.indeterminate_count;
  out.failures.insert(out.failures.end(), b.failures.begin(), b.failures.end());
  for (const auto& [key, v] : b.extremal) {
    if (key.rfind("min_", 0) == 0)
      out.note_min(key, v);
    else if (key.rfind("max_", 0) == 0)
      out.note_max(key, v);
    else
      out.extremal[key] += v;
  }
  out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
  std::sort(out.notes.begin(), out.notes.end());
  out.notes.erase(std::unique(out.notes.begin(), out.notes.end()), out.notes.end());
  out.finalize();
  return out;
}

CheckContext::CheckContext(MarkedRep rep, SampleConfig cfg) : rep_(std::move(rep)), cfg_(std::move(cfg)) {
  cfg_.validate();
}

const std::vector<WordDynamics>& CheckContext::dynamics() {
  if (!dynamics_) {
    std::vector<Word> words;
    for (const Word& w : enumerate_words(rep_.group(), cfg_.word_length))
      if (is_hyperbolic(rep_.holonomy.evaluate(w))) words.push_back(w);
    dynamics_ = word_dynamics(rep_, words, cfg_.tol, cfg_.jobs);
  }
  return *dynamics_;
}

const std::vector<WordDynamics>& CheckContext::boundary() {
  if (!boundary_) {
    const auto& dyn = dynamics();
    std::vector<double> angles;
    for (const auto& d : dyn) angles.push_back(d.angle);
    const std::vector<bool> keep = first_of_each_angle(angles);
    boundary_.emplace();
    for (size_t i = 0; i < dyn.size(); ++i)
      if (keep[i]) boundary_->push_back(dyn[i]);
  }
  return *boundary_;
}

const SampleSet& CheckContext::samples(const std::vector<int>& J) {
  std::vector<int> key = J;
  std::sort(key.begin(), key.end());
  key.erase(std::unique(key.begin(), key.end()), key.end());
  auto it = samples_.find(key);
  if (it == samples_.end()) it = samples_.emplace(key, select_samples(rep_, boundary(), key, cfg_.tol)).first;
  return it->second;
}

std::vector<size_t> CheckContext::spread(const std::vector<int>& J, size_t m) {
  return spread_subsample(samples(J).samples, m);
}

Subspace flag_piece(const Flag& f, int j) {
  const int d = f.ambient_dim();
  if (j <= 0) return Subspace::zero(d);
  if (j >= d) return Subspace::coordinate(d, [d] {
      std::vector<int> all(static_cast<size_t>(d));
      std::iota(all.begin(), all.end(), 1);
      return all;
    }());
  return f.piece(j);
}

namespace {

std::vector<int> clip(int d, std::vector<int> j) {
  std::vector<int> out;
  for (int x : j)
    if (x >= 1 && x <= d - 1) out.push_back(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<int> pieces_for_Hk(int d, int k) { return clip(d, {k, d - k + 1, d - k - 1}); }
std::vector<int> pieces_for_Ck(int d, int k) { return clip(d, {d - k - 2, d - k + 1, k, k + 1}); }

CheckReport check_anosov_gaps(CheckContext& ctx, int k, const GapTracking& tracking) {
  const int d = ctx.dim();
  check_index(d, k);
  CheckReport rep = new_report("anosov_gaps", ctx, k);
  rep.param("gap_source", tracking.path ? "tracked" : "sorted");
  const double tie = std::log1p(ctx.config().tol.gap_tie_tol);
  const MarkedGroup& group = ctx.rep().group();

  std::map<int, double> per_length;
  for (const WordDynamics& w : ctx.dynamics()) {
    const double g = log_gap_for(w, k, tracking);
    const int len = w.word.length();
    auto it = per_length.find(len);
    if (it == per_length.end())
      per_length.emplace(len, g);
    else
      it->second = std::min(it->second, g);
    if (len < 2) continue;
    ++rep.samples_tested;
    rep.note_min("min_log_gap", g);
    if (!(g > tie)) {
      Failure f;
      f.what = "log gap ratio at " + std::to_string(k);
      f.value = g;
      f.words = {group.to_string(w.word)};
      f.angles = {w.angle};
      rep.add_failure(std::move(f));
    }
  }
  bool monotone = true;
  double prev = -kInf;
  for (const auto& [len, g] : per_length) {
    rep.extremal["min_log_gap_len" + std::to_string(len)] = g;
    if (len >= 2 && g < prev - 1e-9 * std::max(1.0, std::abs(prev))) monotone = false;
    if (len >= 2) prev = g;
  }
  rep.extremal["min_length_monotone"] = monotone ? 1.0 : 0.0;
  if (!monotone) rep.notes.push_back("per-length minimum log gap decreases somewhere between lengths 2 and L");

  // Transversality of the limit pieces against a spread reference set.
  const std::vector<int> J = clip(d, {k, d - k});
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto refs = ctx.spread(J, static_cast<size_t>(ctx.config().max_samples));
  const double near = std::numbers::pi / ctx.config().max_samples;
  const TolerancePolicy& tol = ctx.config().tol;
  long pairs = 0;
  CheckReport probe;
  run_parallel(probe, s.samples.size(), ctx.config().jobs, [&](size_t i, CheckReport& out) {
    const BoundarySample& a = s.samples[i];
    for (size_t r : refs) {
      const BoundarySample& b = s.samples[r];
      if (r == i || circle_distance(a.angle, b.angle) < near) continue;
      for (int pass = 0; pass < 2; ++pass) {
        const BoundarySample& x = pass ? b : a;
        const BoundarySample& y = pass ? a : b;
        const double m = transversality_margin(x.flag.piece(k), y.flag.piece(d - k));
        ++out.samples_tested;
        out.note_min("min_transversality_margin", m);
        if (!(m > tol.rank_rel_tol)) {
          Failure f = make_failure("transversality margin", m, {&x, &y}, group);
          add_piece(f, piece_name('x', k), x.flag.piece(k));
          add_piece(f, piece_name('y', d - k), y.flag.piece(d - k));
          out.add_failure(std::move(f));
        }
      }
    }
  });
  pairs = probe.samples_tested;
  rep.failure_count += probe.failure_count;
  for (Failure& f : probe.failures) rep.failures.push_back(std::move(f));
  for (const auto& [key, v] : probe.extremal) rep.note_min(key, v);
  rep.param("transversality_pairs", std::to_string(pairs));
  rep.finalize();
  return rep;
}

CheckReport check_transversality(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  CheckReport rep = new_report("transversality", ctx, k);
  const std::vector<int> J = clip(d, {k, d - k});
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto idx = ctx.spread(J, static_cast<size_t>(ctx.config().pair_samples));
  const TolerancePolicy& tol = ctx.config().tol;
  const MarkedGroup& group = ctx.rep().group();
  run_parallel(rep, idx.size(), ctx.config().jobs, [&](size_t i, CheckReport& out) {
    const BoundarySample& x = s.samples[idx[i]];
    for (size_t j : idx) {
      if (j == idx[i]) continue;
      const BoundarySample& y = s.samples[j];
      const double m = transversality_margin(x.flag.piece(k), y.flag.piece(d - k));
      ++out.samples_tested;
      out.note_min("min_margin", m);
      if (!(m > tol.rank_rel_tol)) {
        Failure f = make_failure("transversality margin", m, {&x, &y}, group);
        add_piece(f, piece_name('x', k), x.flag.piece(k));
        add_piece(f, piece_name('y', d - k), y.flag.piece(d - k));
        out.add_failure(std::move(f));
      }
    }
  });
  rep.finalize();
  return rep;
}

CheckReport check_tridirect(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  CheckReport rep = new_report("tridirect", ctx, k);
  struct Pql {
    int p, q, l;
  };
  std::vector<Pql> adm;
  for (int l = std::max(1, d - k); l <= d - 1; ++l)
    for (int p = 1; p + l < d; ++p)
      for (int q = 1; p + q + l <= d; ++q) adm.push_back({p, q, l});
  if (adm.empty()) {
    rep.notes.push_back("no admissible (p,q,l); vacuous");
    rep.verdict = Verdict::Pass;
    return rep;
  }
  std::vector<int> J;
  for (const Pql& a : adm) J.insert(J.end(), {a.p, a.q, a.l});
  J = clip(d, J);
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto idx = ctx.spread(J, static_cast<size_t>(ctx.config().max_samples));
  const auto triples = ordered_tuples(idx.size(), 3, ctx.config().tuple_cap, ctx.config().seed);
  const TolerancePolicy& tol = ctx.config().tol;
  const MarkedGroup& group = ctx.rep().group();
  run_parallel(rep, triples.size(), ctx.config().jobs, [&](size_t t, CheckReport& out) {
    const BoundarySample& x = s.samples[idx[triples[t][0]]];
    const BoundarySample& y = s.samples[idx[triples[t][1]]];
    const BoundarySample& z = s.samples[idx[triples[t][2]]];
    for (const Pql& a : adm) {
      const double m = direct_margin({x.flag.piece(a.p), y.flag.piece(a.q), z.flag.piece(a.l)});
      ++out.samples_tested;
      out.note_min("min_direct_margin", m);
      if (!(m > tol.rank_rel_tol)) {
        Failure f = make_failure("(" + std::to_string(a.p) + "," + std::to_string(a.q) + "," + std::to_string(a.l) +
                                     ") not direct",
                                 m, {&x, &y, &z}, group);
        add_piece(f, piece_name('x', a.p), x.flag.piece(a.p));
        add_piece(f, piece_name('y', a.q), y.flag.piece(a.q));
        add_piece(f, piece_name('z', a.l), z.flag.piece(a.l));
        out.add_failure(std::move(f));
      }
    }
  });
  rep.finalize();
  return rep;
}

CheckReport check_hyperconvexity(CheckContext& ctx, int k, const std::vector<int>& partition) {
  const int d = ctx.dim();
  check_index(d, k);
  if (partition.size() < 2) fail(ErrorCode::BadPartition, "partition needs at least two parts");
  int total = 0;
  for (int n : partition) {
    if (n < 1 || n > d - 1) fail(ErrorCode::BadPartition, "parts must lie in 1..d-1");
    total += n;
  }
  if (total > d) fail(ErrorCode::BadPartition, "parts add up to more than d");
  if (partition.back() < d - k) fail(ErrorCode::BadPartition, "last part must be at least d-k");

  CheckReport rep = new_report("hyperconvexity", ctx, k);
  std::string ps;
  for (int n : partition) ps += (ps.empty() ? "" : ",") + std::to_string(n);
  rep.param("partition", ps);
  const std::vector<int> J = clip(d, partition);
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto idx = ctx.spread(J, static_cast<size_t>(ctx.config().max_samples));
  const auto tuples = ordered_tuples(idx.size(), partition.size(), ctx.config().tuple_cap, ctx.config().seed);
  const TolerancePolicy& tol = ctx.config().tol;
  const MarkedGroup& group = ctx.rep().group();
  run_parallel(rep, tuples.size(), ctx.config().jobs, [&](size_t t, CheckReport& out) {
    std::vector<Subspace> parts;
    std::vector<const BoundarySample*> pts;
    for (size_t i = 0; i < partition.size(); ++i) {
      pts.push_back(&s.samples[idx[tuples[t][i]]]);
      parts.push_back(pts.back()->flag.piece(partition[i]));
    }
    const double m = direct_margin(parts);
    ++out.samples_tested;
    out.note_min("min_direct_margin", m);
    if (!(m > tol.rank_rel_tol)) {
      Failure f = make_failure("sum not direct", m, pts, group);
      for (size_t i = 0; i < parts.size(); ++i) add_piece(f, "x" + std::to_string(i + 1) + "^" + std::to_string(partition[i]), parts[i]);
      out.add_failure(std::move(f));
    }
  });
  rep.finalize();
  return rep;
}

namespace {

// Shared body of H_k and C_k: three parts a + (b meet c) + e on triples.
template <class Parts>
CheckReport triple_sum_check(CheckContext& ctx, int k, const std::string& property, const std::vector<int>& J,
                             Parts&& parts) {
  CheckReport rep = new_report(property, ctx, k);
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto idx = ctx.spread(J, static_cast<size_t>(ctx.config().max_samples));
  const auto triples = ordered_tuples(idx.size(), 3, ctx.config().tuple_cap, ctx.config().seed);
  const TolerancePolicy& tol = ctx.config().tol;
  const MarkedGroup& group = ctx.rep().group();
  run_parallel(rep, triples.size(), ctx.config().jobs, [&](size_t t, CheckReport& out) {
    const BoundarySample& x = s.samples[idx[triples[t][0]]];
    const BoundarySample& y = s.samples[idx[triples[t][1]]];
    const BoundarySample& z = s.samples[idx[triples[t][2]]];
    const auto [a, b, c, e, names] = parts(x.flag, y.flag, z.flag);
    ++out.samples_tested;
    const Subspace mid = meet(b, c, tol);
    if (mid.dim() != 1) {
      Failure f = make_failure("intersection has dimension " + std::to_string(mid.dim()), mid.dim(), {&x, &y, &z}, group);
      add_piece(f, names[1], b);
      add_piece(f, names[2], c);
      out.add_failure(std::move(f));
      return;
    }
    const double m = direct_margin({a, mid, e});
    out.note_min("min_direct_margin", m);
    if (!(m > tol.rank_rel_tol)) {
      Failure f = make_failure("sum not direct", m, {&x, &y, &z}, group);
      add_piece(f, names[0], a);
      add_piece(f, names[1] + " & " + names[2], mid);
      add_piece(f, names[3], e);
      out.add_failure(std::move(f));
    }
  });
  rep.finalize();
  return rep;
}

using Names = std::vector<std::string>;

}  // namespace

CheckReport check_Hk(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  return triple_sum_check(ctx, k, "H_k", pieces_for_Hk(d, k), [d, k](const Flag& x, const Flag& y, const Flag& z) {
    return std::make_tuple(flag_piece(x, k), flag_piece(y, k), flag_piece(z, d - k + 1), flag_piece(z, d - k - 1),
                           Names{piece_name('x', k), piece_name('y', k), piece_name('z', d - k + 1),
                                 piece_name('z', d - k - 1)});
  });
}

CheckReport check_Ck(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  if (k > d - 2) fail(ErrorCode::IndexOutOfRange, "C_k needs k <= d-2");
  return triple_sum_check(ctx, k, "C_k", pieces_for_Ck(d, k), [d, k](const Flag& x, const Flag& y, const Flag& z) {
    return std::make_tuple(flag_piece(x, d - k - 2), flag_piece(x, d - k + 1), flag_piece(y, k), flag_piece(z, k + 1),
                           Names{piece_name('x', d - k - 2), piece_name('x', d - k + 1), piece_name('y', k),
                                 piece_name('z', k + 1)});
  });
}

namespace {

template <class Check>
CheckReport starred(CheckContext& ctx, int k, const std::string& property, Check&& check) {
  CheckReport own = check(ctx, k);
  CheckContext dual(dual_rep(ctx.rep()), ctx.config());
  CheckReport other = check(dual, k);
  for (Failure& f : other.failures) f.what = "dual: " + f.what;
  CheckReport out = merge(own, other);
  out.property = property;
  out.param("dual_verdict", verdict_name(other.verdict));
  out.param("own_verdict", verdict_name(own.verdict));
  return out;
}

}  // namespace

CheckReport check_Hk_star(CheckContext& ctx, int k) {
  return starred(ctx, k, "H*_k", [](CheckContext& c, int j) { return check_Hk(c, j); });
}

CheckReport check_Ck_star(CheckContext& ctx, int k) {
  return starred(ctx, k, "C*_k", [](CheckContext& c, int j) { return check_Ck(c, j); });
}

CheckReport check_k_positive(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  CheckReport rep = new_report("k_positive", ctx, k);
  rep.param("n_max", std::to_string(ctx.config().n_max));
  if (k == 1) {
    rep.notes.push_back("k = 1: vacuous, positivity of the projections is empty");
    rep.verdict = Verdict::Pass;
    return rep;
  }
  std::vector<int> J;
  for (int j = 1; j < k; ++j) J.push_back(j);
  for (int j = d - k; j < d; ++j) J.push_back(j);
  J.push_back(k);
  J = clip(d, J);
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto idx = ctx.spread(J, static_cast<size_t>(ctx.config().max_samples));
  const SampleConfig& cfg = ctx.config();
  const TolerancePolicy& tol = cfg.tol;
  const MarkedGroup& group = ctx.rep().group();
  rep.param("basepoints", std::to_string(idx.size()));

  run_parallel(rep, idx.size(), cfg.jobs, [&](size_t bi, CheckReport& out) {
    const BoundarySample& base = s.samples[idx[bi]];
    const QuotientMap quot(base.flag.piece(d - k));
    const Subspace& host = base.flag.piece(k);

    // Other samples in counterclockwise order starting after the basepoint.
    std::vector<size_t> others;
    for (size_t i = 0; i < idx.size(); ++i)
      if (i != bi) others.push_back(idx[i]);
    auto rel = [&](size_t i) { return normalize_angle(s.samples[i].angle - base.angle); };
    std::stable_sort(others.begin(), others.end(), [&](size_t a, size_t b) { return rel(a) < rel(b); });

    for (int which = 0; which < 2; ++which) {
      const std::string curve = which == 0 ? "projection" : "truncation";
      std::vector<CurvePoint> pts;
      std::vector<const BoundarySample*> src;
      bool broken = false;
      for (size_t i : others) {
        const BoundarySample& y = s.samples[i];
        std::vector<Subspace> pieces;
        for (int j = 1; j < k && !broken; ++j) {
          Subspace p = which == 0 ? quot.push(y.flag.piece(j), tol)
                                  : coords_in(meet(y.flag.piece(d - k + j), host, tol), host);
          if (p.dim() != j) {
            Failure f = make_failure(curve + " piece " + std::to_string(j) + " has dimension " + std::to_string(p.dim()),
                                     p.dim(), {&base, &y}, group);
            add_piece(f, piece_name('x', which == 0 ? d - k : k), which == 0 ? base.flag.piece(d - k) : host);
            add_piece(f, piece_name('y', which == 0 ? j : d - k + j), y.flag.piece(which == 0 ? j : d - k + j));
            out.add_failure(std::move(f));
            broken = true;
          }
          pieces.push_back(std::move(p));
        }
        if (broken) break;
        pts.push_back({rel(i), Flag::from_pieces(std::move(pieces), 1e-7)});
        src.push_back(&y);
      }
      if (broken || pts.size() < 3) continue;
      CurveVerdict cv;
      try {
        cv = curve_positive(pts, cfg.n_max, cfg.tuple_cap, cfg.seed + bi, tol);
      } catch (const Error& e) {
        Failure f = make_failure(curve + ": " + e.what(), 0.0, {&base}, group);
        out.add_failure(std::move(f));
        continue;
      }
      out.samples_tested += cv.tuples_tested;
      out.indeterminate_count += cv.indeterminate;
      if (cv.tuples_tested > cv.negative + cv.indeterminate) out.note_min("min_rel_minor", cv.min_rel_minor);
      if (cv.negative > 0) {
        out.failure_count += cv.negative - 1;
        std::vector<const BoundarySample*> w{&base};
        for (int t : cv.tuple) w.push_back(src[static_cast<size_t>(t)]);
        std::ostringstream what;
        what << curve << " tuple not positive (" << cv.negative << " of " << cv.tuples_tested << "; minor "
             << cv.verdict.minor.to_string() << " of factor " << cv.verdict.factor << ")";
        Failure f = make_failure(what.str(), cv.verdict.value, w, group);
        add_piece(f, piece_name('x', which == 0 ? d - k : k), which == 0 ? base.flag.piece(d - k) : host);
        out.add_failure(std::move(f));
      }
    }
  });
  rep.finalize();
  return rep;
}

CheckReport check_positively_ratioed(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  CheckReport rep = new_report("positively_ratioed", ctx, k);
  const std::vector<int> J = clip(d, {k, d - k});
  const SampleSet& s = ctx.samples(J);
  note_skips(rep, s);
  const auto idx = ctx.spread(J, static_cast<size_t>(ctx.config().max_samples));
  const SampleConfig& cfg = ctx.config();
  const MarkedGroup& group = ctx.rep().group();

  // Rotations of increasing 4-subsets are exactly the cyclically ordered quadruples.
  std::vector<std::array<size_t, 4>> quads;
  const size_t m = idx.size();
  for (size_t a = 0; a < m; ++a)
    for (size_t b = a + 1; b < m; ++b)
      for (size_t c = b + 1; c < m; ++c)
        for (size_t e = c + 1; e < m; ++e) {
          const std::array<size_t, 4> q{idx[a], idx[b], idx[c], idx[e]};
          for (size_t r = 0; r < 4; ++r) quads.push_back({q[r], q[(r + 1) % 4], q[(r + 2) % 4], q[(r + 3) % 4]});
        }
  if (static_cast<long>(quads.size()) > cfg.tuple_cap) {
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(quads.begin(), quads.end(), rng);
    quads.resize(static_cast<size_t>(cfg.tuple_cap));
    std::sort(quads.begin(), quads.end());
  }
  const double floor = std::log1p(-cfg.tol.cr_rel_tol);
  run_parallel(rep, quads.size(), cfg.jobs, [&](size_t qi, CheckReport& out) {
    const auto& q = quads[qi];
    const BoundarySample &x = s.samples[q[0]], &y = s.samples[q[1]], &z = s.samples[q[2]], &w = s.samples[q[3]];
    ++out.samples_tested;
    auto witness = [&](const std::string& what, double v) {
      Failure f = make_failure(what, v, {&x, &y, &z, &w}, group);
      add_piece(f, piece_name('x', k), x.flag.piece(k));
      add_piece(f, piece_name('y', d - k), y.flag.piece(d - k));
      add_piece(f, piece_name('z', d - k), z.flag.piece(d - k));
      add_piece(f, piece_name('w', k), w.flag.piece(k));
      out.add_failure(std::move(f));
    };
    CrossRatio cr;
    try {
      cr = cross_ratio_k(x.flag.piece(k), y.flag.piece(d - k), z.flag.piece(d - k), w.flag.piece(k), cfg.tol);
    } catch (const Error& e) {
      witness(e.what(), 0.0);
      return;
    }
    if (cr.zero || cr.infinite) {
      witness(cr.zero ? "cross ratio is 0" : "cross ratio is infinite", cr.zero ? 0.0 : kInf);
      return;
    }
    const double lg = cr.sign > 0 ? cr.log_abs : -kInf;
    out.note_min("min_log_cr", lg);
    if (cr.sign <= 0 || !(cr.log_abs >= floor)) witness("log cross ratio below 0", cr.sign > 0 ? cr.log_abs : -cr.log_abs);
  });
  if (rep.extremal.count("min_log_cr")) rep.extremal["min_cr_minus_one"] = std::expm1(rep.extremal["min_log_cr"]);
  rep.finalize();
  return rep;
}

CheckReport check_collar(CheckContext& ctx, int k) {
  const int d = ctx.dim();
  check_index(d, k);
  CheckReport rep = new_report("collar", ctx, k);
  const auto& words = ctx.boundary();
  const MarkedGroup& group = ctx.rep().group();
  std::vector<double> plus(words.size()), minus(words.size()), weight(words.size()), root(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    const auto fp = fixed_points(ctx.rep().holonomy.evaluate(words[i].word));
    plus[i] = fp.first;
    minus[i] = fp.second;
    const auto& lm = words[i].eigen.spectrum.log_moduli;
    double wsum = 0.0;
    for (int j = 0; j < k; ++j) wsum += lm[static_cast<size_t>(j)] - lm[static_cast<size_t>(d - 1 - j)];
    weight[i] = wsum;
    // log of (1 - l_{k+1}/l_k)^{-1}
    const double g = lm[static_cast<size_t>(k - 1)] - lm[static_cast<size_t>(k)];
    root[i] = g > 0 ? -std::log1p(-std::exp(-g)) : kInf;
  }
  run_parallel(rep, words.size(), ctx.config().jobs, [&](size_t i, CheckReport& out) {
    const double span = normalize_angle(plus[i] - minus[i]);
    for (size_t j = 0; j < words.size(); ++j) {
      if (j == i) continue;
      const bool same = (circle_distance(plus[i], plus[j]) < 1e-10 && circle_distance(minus[i], minus[j]) < 1e-10) ||
                        (circle_distance(plus[i], minus[j]) < 1e-10 && circle_distance(minus[i], plus[j]) < 1e-10);
      if (same) continue;
      const bool a = normalize_angle(plus[j] - minus[i]) < span, b = normalize_angle(minus[j] - minus[i]) < span;
      if (a == b) continue;
      ++out.samples_tested;
      const double margin = weight[i] - root[j];
      out.note_min("min_log_margin", margin);
      if (!(margin > 0)) {
        Failure f;
        f.what = "weight of g does not exceed the root bound of h";
        f.value = margin;
        f.words = {group.to_string(words[i].word), group.to_string(words[j].word)};
        f.angles = {plus[i], plus[j]};
        out.add_failure(std::move(f));
      }
    }
  });
  rep.param("linked_words", std::to_string(words.size()));
  rep.finalize();
  return rep;
}

#define KPOS_FRESH(call)              \
  CheckContext ctx(r, cfg);           \
  return call;

CheckReport check_anosov_gaps(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_anosov_gaps(ctx, k)) }
CheckReport check_transversality(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_transversality(ctx, k)) }
CheckReport check_tridirect(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_tridirect(ctx, k)) }
CheckReport check_hyperconvexity(const MarkedRep& r, int k, const std::vector<int>& partition,
                                 const SampleConfig& cfg) {
  KPOS_FRESH(check_hyperconvexity(ctx, k, partition))
}
CheckReport check_Hk(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_Hk(ctx, k)) }
CheckReport check_Ck(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_Ck(ctx, k)) }
CheckReport check_k_positive(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_k_positive(ctx, k)) }
CheckReport check_positively_ratioed(const MarkedRep& r, int k, const SampleConfig& cfg) {
  KPOS_FRESH(check_positively_ratioed(ctx, k))
}
CheckReport check_collar(const MarkedRep& r, int k, const SampleConfig& cfg) { KPOS_FRESH(check_collar(ctx, k)) }

#undef KPOS_FRESH

namespace {

const std::vector<std::string> kCheckNames{"gaps", "transversality", "tridirect", "hyperconvexity", "Hk", "Ck",
                                           "Hk*", "Ck*", "kpos", "ratioed", "collar"};

}  // namespace

bool is_known_check(const std::string& name) {
  return std::find(kCheckNames.begin(), kCheckNames.end(), name) != kCheckNames.end();
}

CheckReport run_check(CheckContext& ctx, const CheckSpec& spec, const GapTracking& tracking) {
  const std::string& n = spec.name;
  if (n == "gaps") return check_anosov_gaps(ctx, spec.k, tracking);
  if (n == "transversality") return check_transversality(ctx, spec.k);
  if (n == "tridirect") return check_tridirect(ctx, spec.k);
  if (n == "hyperconvexity") return check_hyperconvexity(ctx, spec.k, spec.partition);
  if (n == "Hk") return check_Hk(ctx, spec.k);
  if (n == "Ck") return check_Ck(ctx, spec.k);
  if (n == "Hk*") return check_Hk_star(ctx, spec.k);
  if (n == "Ck*") return check_Ck_star(ctx, spec.k);
  if (n == "kpos") return check_k_positive(ctx, spec.k);
  if (n == "ratioed") return check_positively_ratioed(ctx, spec.k);
  if (n == "collar") return check_collar(ctx, spec.k);
  fail(ErrorCode::ConfigError, "unknown check '" + n + "'");
}

void summarize_sweep(SweepResult& res) {
  res.t0.reset();
  res.t0_grid.reset();
  res.crossings = 0;
  res.gaps_monotone = true;
  res.failure_order = true;
  const size_t kk = static_cast<size_t>(res.k - 1);
  for (size_t i = 0; i < res.rows.size(); ++i) {
    const double g = res.rows[i].min_log_gap[kk];
    if (i > 0 && (res.rows[i - 1].min_log_gap[kk] > 0) != (g > 0)) ++res.crossings;
    if (!res.t0_grid && !(g > 0)) {
      res.t0_grid = res.rows[i].t;
      if (i > 0) {
        const double g0 = res.rows[i - 1].min_log_gap[kk], t0 = res.rows[i - 1].t, t1 = res.rows[i].t;
        res.t0 = t0 + (t1 - t0) * g0 / (g0 - g);
      } else {
        res.t0 = res.rows[i].t;
      }
    }
  }

  auto first_fail = [&](const std::string& name) -> std::optional<size_t> {
    for (size_t c = 0; c < res.checks.size(); ++c) {
      if (res.checks[c].name != name || res.checks[c].k != res.k) continue;
      for (size_t i = 0; i < res.rows.size(); ++i)
        if (res.rows[i].reports[c].verdict == Verdict::Fail) return i;
    }
    return std::nullopt;
  };
  for (size_t c = 0; c < res.checks.size(); ++c) {
    if (res.checks[c].name != "gaps" || res.checks[c].k != res.k) continue;
    bool failed = false;
    for (const SweepRow& row : res.rows) {
      const bool f = row.reports[c].verdict == Verdict::Fail;
      if (failed && !f) res.gaps_monotone = false;
      failed = failed || f;
    }
  }
  const auto gf = first_fail("gaps"), pf = first_fail("kpos");
  if (pf && (!gf || *gf > *pf)) res.failure_order = false;
}

SweepResult sweep_deformation(const DeformationPath& path, const std::vector<double>& t_grid,
                              const std::vector<CheckSpec>& checks, int k, const SampleConfig& cfg) {
  if (t_grid.empty()) fail(ErrorCode::ConfigError, "empty t grid");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) fail(ErrorCode::ConfigError, "t grid must be increasing");
  const int d = path.base.dim;
  check_index(d, k);
  cfg.validate();

  std::vector<Word> words;
  for (const Word& w : enumerate_words(path.base.group(), cfg.word_length))
    if (is_hyperbolic(path.base.holonomy.evaluate(w))) words.push_back(w);
  std::vector<TrackedGaps> tracked(words.size());
  parallel_for(words.size(), cfg.jobs, [&](size_t i) { tracked[i] = tracked_log_gaps(path, words[i]); });
  std::map<std::vector<int>, TrackedGaps> cache;
  for (size_t i = 0; i < words.size(); ++i) cache.emplace(words[i].letters, tracked[i]);

  SweepResult out;
  out.checks = checks;
  out.k = k;
  for (double t : t_grid) {
    SweepRow row;
    row.t = t;
    row.min_log_gap.assign(static_cast<size_t>(d - 1), kInf);
    for (const TrackedGaps& g : tracked) {
      const auto v = g.at(t);
      for (int j = 0; j < d - 1; ++j) row.min_log_gap[static_cast<size_t>(j)] = std::min(row.min_log_gap[static_cast<size_t>(j)], v[static_cast<size_t>(j)]);
    }
    CheckContext ctx(scaling_path(path, t), cfg);
    const GapTracking tr{&path, t, &cache};
    for (const CheckSpec& c : checks) {
      CheckReport r = run_check(ctx, c, tr);
      r.param("t", [&] {
        std::ostringstream o;
        o.precision(17);
        o << t;
        return o.str();
      }());
      row.reports.push_back(std::move(r));
    }
    out.rows.push_back(std::move(row));
  }

  summarize_sweep(out);
  return out;
}

}  // namespace kpos
