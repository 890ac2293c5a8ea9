#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kpos/reps.hpp"

namespace kpos {

struct SampleConfig {
  int word_length = 4;     // L
  int n_max = 4;           // largest tuple for positivity
  std::uint64_t seed = 1;
  int k = 1;
  TolerancePolicy tol;
  int max_samples = 12;    // boundary points used by triple/tuple checks
  int pair_samples = 64;   // boundary points used by pair checks
  long tuple_cap = 20000;  // seeded subsampling above this many tuples
  int jobs = 1;

  // Throws ConfigError: needs 1 <= L <= 8, 3 <= n_max <= 5, sample counts >= 3.
  void validate() const;
};

enum class Verdict { Pass, Fail, Indeterminate };
const char* verdict_name(Verdict v);

struct FlagPiece {
  std::string name;  // e.g. "x^2"
  Matrix basis;
};

struct Failure {
  std::vector<std::string> words;
  std::vector<double> angles;
  std::vector<FlagPiece> flags;
  std::string what;
  double value = 0.0;
};

struct CheckReport {
  static constexpr size_t kMaxFailures = 32;

  std::string property;
  std::vector<std::pair<std::string, std::string>> params;
  long samples_tested = 0;
  long failure_count = 0;
  long indeterminate_count = 0;
  std::vector<Failure> failures;  // canonical order, at most kMaxFailures
  // Keys starting with "min_" merge by min, "max_" by max, others by sum.
  std::map<std::string, double> extremal;
  std::vector<std::string> notes;
  Verdict verdict = Verdict::Indeterminate;

  void add_failure(Failure f);
  void note_min(const std::string& key, double v);
  void note_max(const std::string& key, double v);
  void param(const std::string& key, const std::string& value);
  // Fail iff a failure was recorded; indeterminate when guard bands were hit
  // or nothing could be tested.
  void finalize();
};

// Counts add, failures union, extremals combine. Associative and commutative
// once finalized; params and property are taken from `a`.
CheckReport merge(const CheckReport& a, const CheckReport& b);

// Shared sampling for several checks on one representation.
class CheckContext {
 public:
  CheckContext(MarkedRep rep, SampleConfig cfg);

  const MarkedRep& rep() const { return rep_; }
  const SampleConfig& config() const { return cfg_; }
  int dim() const { return rep_.dim; }

  // All hyperbolic words of length 1..L with their dynamics.
  const std::vector<WordDynamics>& dynamics();
  // The subset with distinct attracting points.
  const std::vector<WordDynamics>& boundary();
  // Boundary samples carrying the pieces J, and a spread subsample of them.
  const SampleSet& samples(const std::vector<int>& J);
  std::vector<size_t> spread(const std::vector<int>& J, size_t m);

 private:
  MarkedRep rep_;
  SampleConfig cfg_;
  std::optional<std::vector<WordDynamics>> dynamics_;
  std::optional<std::vector<WordDynamics>> boundary_;
  std::map<std::vector<int>, SampleSet> samples_;
};

// Gap source for check_anosov_gaps: the sorted spectrum by default, or the
// labels carried along a deformation path.
struct GapTracking {
  const DeformationPath* path = nullptr;
  double t = 0.0;
  const std::map<std::vector<int>, TrackedGaps>* cache = nullptr;
};

CheckReport check_anosov_gaps(CheckContext& ctx, int k, const GapTracking& tracking = {});
CheckReport check_transversality(CheckContext& ctx, int k);
CheckReport check_tridirect(CheckContext& ctx, int k);
CheckReport check_hyperconvexity(CheckContext& ctx, int k, const std::vector<int>& partition);
CheckReport check_Hk(CheckContext& ctx, int k);
CheckReport check_Ck(CheckContext& ctx, int k);
// The starred variants also run the check on the dual representation at the
// same index; both must pass.
CheckReport check_Hk_star(CheckContext& ctx, int k);
CheckReport check_Ck_star(CheckContext& ctx, int k);
CheckReport check_k_positive(CheckContext& ctx, int k);
CheckReport check_positively_ratioed(CheckContext& ctx, int k);
CheckReport check_collar(CheckContext& ctx, int k);

// Convenience overloads building a fresh context with cfg.k ignored.
CheckReport check_anosov_gaps(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_transversality(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_tridirect(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_hyperconvexity(const MarkedRep& r, int k, const std::vector<int>& partition,
                                 const SampleConfig& cfg);
CheckReport check_Hk(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_Ck(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_k_positive(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_positively_ratioed(const MarkedRep& r, int k, const SampleConfig& cfg);
CheckReport check_collar(const MarkedRep& r, int k, const SampleConfig& cfg);

// Piece j of a flag with the conventions x^0 = 0 and x^d = E.
Subspace flag_piece(const Flag& f, int j);
std::vector<int> pieces_for_Hk(int d, int k);
std::vector<int> pieces_for_Ck(int d, int k);

struct CheckSpec {
  std::string name;  // gaps, transversality, tridirect, hyperconvexity, Hk, Ck, Hk*, Ck*, kpos, ratioed, collar
  int k = 1;
  std::vector<int> partition;  // hyperconvexity only
};

// Throws ConfigError for unknown names.
CheckReport run_check(CheckContext& ctx, const CheckSpec& spec, const GapTracking& tracking = {});
bool is_known_check(const std::string& name);

struct SweepRow {
  double t = 0.0;
  std::vector<double> min_log_gap;  // tracked, index k-1 for k = 1..d-1
  std::vector<CheckReport> reports;
};

struct SweepResult {
  std::vector<CheckSpec> checks;
  std::vector<SweepRow> rows;
  int k = 1;
  std::optional<double> t0;      // interpolated crossing of the tracked k-gap
  std::optional<double> t0_grid;  // first grid point with tracked gap <= 1
  int crossings = 0;
  bool gaps_monotone = true;      // once the k-gap check fails it keeps failing
  bool failure_order = true;      // gap failure at k no later than k-positivity failure
};

// Fills t0, t0_grid, crossings and the order flags from rows and checks.
void summarize_sweep(SweepResult& res);
SweepResult sweep_deformation(const DeformationPath& path, const std::vector<double>& t_grid,
                              const std::vector<CheckSpec>& checks, int k, const SampleConfig& cfg);

}  // namespace kpos
