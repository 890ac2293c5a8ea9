#include "kpos/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <set>

#include "kpos/grassmann.hpp"

namespace kpos::cli {

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::ConfigError, what); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(where + " needs '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + ": '" + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) bad(where + " must be a nonempty array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = j[0].is_array() ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) bad(where + ": ragged rows");
    for (int c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) bad(where + ": entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

void apply_sampling(SampleConfig& c, const json& j, const std::string& where) {
  only_keys(j, where,
            {"word_length", "n_max", "max_samples", "pair_samples", "tuple_cap", "rank_rel_tol", "gap_tie_tol",
             "cr_rel_tol"});
  c.word_length = get_or(j, "word_length", c.word_length, where);
  c.n_max = get_or(j, "n_max", c.n_max, where);
  c.max_samples = get_or(j, "max_samples", c.max_samples, where);
  c.pair_samples = get_or(j, "pair_samples", c.pair_samples, where);
  c.tuple_cap = get_or(j, "tuple_cap", c.tuple_cap, where);
  c.tol.rank_rel_tol = get_or(j, "rank_rel_tol", c.tol.rank_rel_tol, where);
  c.tol.gap_tie_tol = get_or(j, "gap_tie_tol", c.tol.gap_tie_tol, where);
  c.tol.cr_rel_tol = get_or(j, "cr_rel_tol", c.tol.cr_rel_tol, where);
}

std::vector<double> parse_grid(const json& j) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) bad("t_grid entries must be numbers");
      grid.push_back(v.get<double>());
    }
  } else {
    only_keys(j, "t_grid", {"start", "stop", "step"});
    const double start = get<double>(j, "start", "t_grid"), stop = get<double>(j, "stop", "t_grid"),
                 step = get<double>(j, "step", "t_grid");
    if (!(step > 0)) bad("t_grid step must be positive");
    if (stop >= start) {
      const long n = std::lround(std::floor((stop - start) / step + 1e-9));
      for (long i = 0; i <= n; ++i) grid.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  }
  if (grid.empty()) bad("empty t grid");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) bad("t grid must be increasing");
  return grid;
}

std::vector<double> parse_chi(const json& j, const MarkedGroup& g) {
  std::vector<double> chi(static_cast<size_t>(g.generator_count()), 0.0);
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != g.generator_count()) bad("chi needs one value per generator");
    for (size_t i = 0; i < j.size(); ++i) chi[i] = j[i].get<double>();
  } else if (j.is_object()) {
    for (const auto& [name, v] : j.items()) {
      if (!v.is_number()) bad("chi values must be numbers");
      chi[static_cast<size_t>(g.generator_index(name) - 1)] = v.get<double>();
    }
  } else {
    bad("chi must be an array or an object keyed by generator name");
  }
  return chi;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write " + p.string());
  f << text;
  if (!f) fail(ErrorCode::Io, "write failed for " + p.string());
}

std::filesystem::path prepare_out(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + c.out_dir + ": " + ec.message());
  return c.out_dir;
}

std::string check_label(const CheckSpec& s) {
  std::string out = s.name + " k=" + std::to_string(s.k);
  if (!s.partition.empty()) {
    out += " (";
    for (size_t i = 0; i < s.partition.size(); ++i) out += (i ? "," : "") + std::to_string(s.partition[i]);
    out += ")";
  }
  return out;
}

}  // namespace

json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt17(v);
}

std::string file_stem(const CheckSpec& s) {
  std::string out;
  for (char ch : s.name) {
    if (ch == '*')
      out += "_star";
    else
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  out += "_k" + std::to_string(s.k);
  for (int n : s.partition) out += "_" + std::to_string(n);
  return out;
}

json sample_config_json(const SampleConfig& c) {
  return json{{"word_length", c.word_length},
              {"n_max", c.n_max},
              {"max_samples", c.max_samples},
              {"pair_samples", c.pair_samples},
              {"tuple_cap", c.tuple_cap},
              {"rank_rel_tol", c.tol.rank_rel_tol},
              {"gap_tie_tol", c.tol.gap_tie_tol},
              {"cr_rel_tol", c.tol.cr_rel_tol}};
}

json ExperimentConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["representation"] = representation;
  j["sampling"] = sample_config_json(sampling);
  json cs = json::array();
  for (const CheckEntry& e : checks) {
    json cj{{"name", e.spec.name}, {"k", e.spec.k}};
    if (!e.spec.partition.empty()) cj["partition"] = e.spec.partition;
    cj["sampling"] = sample_config_json(e.cfg);
    cs.push_back(cj);
  }
  j["checks"] = cs;
  if (path) {
    json t = json::array();
    for (double v : path->t_grid) t.push_back(v);
    j["path"] = json{{"split", path->split}, {"chi", path->chi_json}, {"t_grid", t}};
  }
  j["sweep"] = json{{"k", sweep_k}};
  j["crosstable"] =
      json{{"k", crosstable.k}, {"include_reversed", crosstable.include_reversed}, {"max_rows", crosstable.max_rows}};
  return j;
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j, "config", {"seed", "representation", "sampling", "checks", "path", "sweep", "crosstable", "out_dir"});
  ExperimentConfig c;
  if (!j.contains("seed")) bad("config needs 'seed'");
  if (!j["seed"].is_number_unsigned()) bad("seed must be a non-negative integer");
  c.seed = j["seed"].get<std::uint64_t>();
  if (!j.contains("representation")) bad("config needs 'representation'");
  c.representation = j["representation"];
  if (j.contains("sampling")) apply_sampling(c.sampling, j["sampling"], "sampling");
  c.sampling.seed = c.seed;
  c.sampling.validate();

  if (j.contains("checks")) {
    if (!j["checks"].is_array()) bad("checks must be an array");
    for (const auto& cj : j["checks"]) {
      only_keys(cj, "check", {"name", "k", "partition", "sampling"});
      CheckEntry e;
      e.spec.name = get<std::string>(cj, "name", "check");
      if (!is_known_check(e.spec.name)) bad("unknown check '" + e.spec.name + "'");
      e.spec.k = get_or(cj, "k", 1, "check " + e.spec.name);
      e.spec.partition = get_or(cj, "partition", std::vector<int>{}, "check " + e.spec.name);
      if (e.spec.name == "hyperconvexity" && e.spec.partition.empty()) bad("hyperconvexity needs a partition");
      e.cfg = c.sampling;
      if (cj.contains("sampling")) apply_sampling(e.cfg, cj["sampling"], "check " + e.spec.name + " sampling");
      e.cfg.k = e.spec.k;
      e.cfg.validate();
      c.checks.push_back(std::move(e));
    }
  }
  if (j.contains("path")) {
    const json& pj = j["path"];
    only_keys(pj, "path", {"split", "chi", "t_grid"});
    PathSpec p;
    p.split = get<int>(pj, "split", "path");
    if (!pj.contains("chi")) bad("path needs 'chi'");
    p.chi_json = pj["chi"];
    if (pj.contains("t_grid")) p.t_grid = parse_grid(pj["t_grid"]);
    c.path = std::move(p);
  }
  if (j.contains("sweep")) {
    only_keys(j["sweep"], "sweep", {"k"});
    c.sweep_k = get_or(j["sweep"], "k", 1, "sweep");
  }
  if (j.contains("crosstable")) {
    const json& x = j["crosstable"];
    only_keys(x, "crosstable", {"k", "include_reversed", "max_rows"});
    c.crosstable.k = get_or(x, "k", 1, "crosstable");
    c.crosstable.include_reversed = get_or(x, "include_reversed", false, "crosstable");
    c.crosstable.max_rows = get_or(x, "max_rows", 20000L, "crosstable");
    if (c.crosstable.max_rows < 1) bad("crosstable max_rows must be positive");
  }
  c.out_dir = get_or(j, "out_dir", c.out_dir, "config");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) bad("cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    bad("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void set_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.sampling.seed = seed;
  for (CheckEntry& e : c.checks) e.cfg.seed = seed;
}

void set_jobs(ExperimentConfig& c, int jobs) {
  if (jobs < 1) bad("jobs must be positive");
  c.jobs = jobs;
  c.sampling.jobs = jobs;
  for (CheckEntry& e : c.checks) e.cfg.jobs = jobs;
}

Holonomy2 build_holonomy(const json& spec) {
  const std::string type = get<std::string>(spec, "type", "holonomy");
  if (type == "octagon") {
    only_keys(spec, "holonomy", {"type"});
    return octagon_holonomy();
  }
  if (type == "schottky") {
    only_keys(spec, "holonomy", {"type", "spread"});
    return schottky_holonomy(get<double>(spec, "spread", "schottky holonomy"));
  }
  if (type == "explicit") {
    only_keys(spec, "holonomy", {"type", "group", "generators"});
    if (!spec.contains("group")) bad("explicit holonomy needs 'group'");
    const json& g = spec["group"];
    only_keys(g, "group", {"kind", "genus", "rank", "relator"});
    const std::string kind = get<std::string>(g, "kind", "group");
    Holonomy2 h;
    if (kind == "surface") {
      const int genus = get<int>(g, "genus", "group");
      if (genus < 2) bad("surface genus must be at least 2");
      h.group = MarkedGroup::surface(genus);
      if (g.contains("relator")) h.group = MarkedGroup::surface(genus, h.group.parse(get<std::string>(g, "relator", "group")));
    } else if (kind == "free") {
      const int rank = get<int>(g, "rank", "group");
      if (rank < 1 || rank > 26) bad("free rank must lie in 1..26");
      h.group = MarkedGroup::free(rank);
    } else {
      bad("group kind must be 'surface' or 'free'");
    }
    if (!spec.contains("generators") || !spec["generators"].is_array()) bad("explicit holonomy needs 'generators'");
    if (static_cast<int>(spec["generators"].size()) != h.group.generator_count())
      bad("explicit holonomy needs one matrix per generator");
    for (const auto& mj : spec["generators"]) {
      const Matrix m = parse_matrix(mj, "holonomy generator");
      if (m.rows() != 2 || m.cols() != 2) bad("holonomy generators must be 2x2");
      const double det = m.determinant();
      if (!(det > 0)) fail(ErrorCode::ConstructionFailed, "holonomy generator with non-positive determinant");
      h.generators.push_back(Mat2(m) / std::sqrt(det));
    }
    h.relation_residual = relation_residual(h.group, h.generators);
    if (h.relation_residual > 1e-6)
      fail(ErrorCode::ConstructionFailed, "holonomy violates the relator (residual " + fmt17(h.relation_residual) + ")");
    return h;
  }
  bad("unknown holonomy type '" + type + "'");
}

MarkedRep build_rep(const json& spec) {
  const std::string type = get<std::string>(spec, "type", "representation");
  if (type == "fuchsian") {
    only_keys(spec, "representation", {"type", "multiindex", "holonomy"});
    const auto mi = get<std::vector<int>>(spec, "multiindex", "fuchsian representation");
    const Holonomy2 h = build_holonomy(spec.contains("holonomy") ? spec["holonomy"] : json{{"type", "octagon"}});
    return fuchsian_rep(mi, h);
  }
  if (type == "explicit") {
    only_keys(spec, "representation", {"type", "holonomy", "generators", "blocks", "label"});
    if (!spec.contains("holonomy")) bad("explicit representation needs 'holonomy'");
    const Holonomy2 h = build_holonomy(spec["holonomy"]);
    if (!spec.contains("generators") || !spec["generators"].is_array()) bad("explicit representation needs 'generators'");
    std::vector<Matrix> gens;
    for (const auto& mj : spec["generators"]) gens.push_back(parse_matrix(mj, "generator"));
    return make_rep(h, std::move(gens), get_or(spec, "label", std::string("explicit"), "representation"),
                    get_or(spec, "blocks", std::vector<int>{}, "representation"));
  }
  if (type == "eps_family") {
    only_keys(spec, "representation", {"type", "lambda", "n"});
    return eps_family_rep(get<double>(spec, "lambda", "eps_family"), get<int>(spec, "n", "eps_family"));
  }
  if (type == "dual") {
    only_keys(spec, "representation", {"type", "of"});
    if (!spec.contains("of")) bad("dual needs 'of'");
    return dual_rep(build_rep(spec["of"]));
  }
  if (type == "exterior_power") {
    only_keys(spec, "representation", {"type", "of", "k"});
    if (!spec.contains("of")) bad("exterior_power needs 'of'");
    return ext_power_rep(build_rep(spec["of"]), get<int>(spec, "k", "exterior_power"));
  }
  if (type == "scaling") {
    only_keys(spec, "representation", {"type", "base", "split", "chi", "t"});
    if (!spec.contains("base") || !spec.contains("chi")) bad("scaling needs 'base' and 'chi'");
    MarkedRep base = build_rep(spec["base"]);
    const std::vector<double> chi = parse_chi(spec["chi"], base.group());
    const DeformationPath p = make_path(std::move(base), get<int>(spec, "split", "scaling"), chi);
    return scaling_path(p, get<double>(spec, "t", "scaling"));
  }
  bad("unknown representation type '" + type + "'");
}

DeformationPath build_path(const ExperimentConfig& c) {
  if (!c.path) bad("sweep needs a 'path'");
  if (c.path->t_grid.empty()) bad("empty t grid");
  MarkedRep base = build_rep(c.representation);
  const std::vector<double> chi = parse_chi(c.path->chi_json, base.group());
  return make_path(std::move(base), c.path->split, chi);
}

json report_json(const CheckReport& r) {
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  json failures = json::array();
  for (const Failure& f : r.failures) {
    json angles = json::array();
    for (double a : f.angles) angles.push_back(number(a));
    json flags = json::array();
    for (const FlagPiece& p : f.flags) {
      json rows = json::array();
      for (int i = 0; i < p.basis.rows(); ++i) {
        json row = json::array();
        for (int c = 0; c < p.basis.cols(); ++c) row.push_back(number(p.basis(i, c)));
        rows.push_back(row);
      }
      flags.push_back(json{{"name", p.name}, {"basis", rows}});
    }
    failures.push_back(
        json{{"what", f.what}, {"value", number(f.value)}, {"words", f.words}, {"angles", angles}, {"flags", flags}});
  }
  json extremal = json::object();
  for (const auto& [k, v] : r.extremal) extremal[k] = number(v);
  return json{{"property", r.property},
              {"params", params},
              {"samples_tested", r.samples_tested},
              {"failure_count", r.failure_count},
              {"indeterminate_count", r.indeterminate_count},
              {"failures", failures},
              {"extremal", extremal},
              {"notes", r.notes},
              {"verdict", verdict_name(r.verdict)}};
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return 0;
    case Verdict::Fail:
      return 1;
    case Verdict::Indeterminate:
      return 2;
  }
  return 70;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::BadPartition:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::InvalidTolerance:
    case ErrorCode::WordTooLong:
    case ErrorCode::InvalidGroup:
      return 64;
    case ErrorCode::ConstructionFailed:
    case ErrorCode::NotHomomorphism:
    case ErrorCode::NotBlockDiagonal:
    case ErrorCode::NotUnimodular:
    case ErrorCode::Singular:
    case ErrorCode::DimMismatch:
      return 65;
    case ErrorCode::Io:
      return 74;
    default:
      return 70;
  }
}

int cmd_check(const ExperimentConfig& c, std::ostream& log) {
  if (c.checks.empty()) bad("no checks requested");
  const MarkedRep rep = build_rep(c.representation);
  const auto out = prepare_out(c);

  // One context per distinct sampling configuration, in first-use order.
  std::vector<std::pair<std::string, std::unique_ptr<CheckContext>>> contexts;
  auto context_for = [&](const SampleConfig& cfg) -> CheckContext& {
    const std::string key = sample_config_json(cfg).dump() + std::to_string(cfg.jobs);
    for (auto& [k, ctx] : contexts)
      if (k == key) return *ctx;
    contexts.emplace_back(key, std::make_unique<CheckContext>(rep, cfg));
    return *contexts.back().second;
  };

  json summary_reports = json::array();
  bool any_fail = false, any_indeterminate = false;
  for (size_t i = 0; i < c.checks.size(); ++i) {
    const CheckEntry& e = c.checks[i];
    const CheckReport r = run_check(context_for(e.cfg), e.spec);
    const std::string file = std::to_string(i + 1) + "_" + file_stem(e.spec) + ".json";
    json rj = report_json(r);
    rj["params"]["name"] = e.spec.name;
    rj["sampling"] = sample_config_json(e.cfg);
    write_file(out / file, rj.dump(2) + "\n");
    any_fail = any_fail || r.verdict == Verdict::Fail;
    any_indeterminate = any_indeterminate || r.verdict == Verdict::Indeterminate;
    log << check_label(e.spec) << ": " << verdict_name(r.verdict) << " (" << r.samples_tested << " tested, "
        << r.failure_count << " failures)\n";
    summary_reports.push_back(json{{"check", check_label(e.spec)},
                                   {"file", file},
                                   {"property", r.property},
                                   {"samples_tested", r.samples_tested},
                                   {"failure_count", r.failure_count},
                                   {"verdict", verdict_name(r.verdict)}});
  }
  const Verdict overall = any_fail ? Verdict::Fail : any_indeterminate ? Verdict::Indeterminate : Verdict::Pass;
  const json summary{{"command", "check"},
                     {"representation", rep.label},
                     {"dim", rep.dim},
                     {"config", c.to_json()},
                     {"reports", summary_reports},
                     {"verdict", verdict_name(overall)},
                     {"exit_code", exit_code(overall)}};
  write_file(out / "summary.json", summary.dump(2) + "\n");
  return exit_code(overall);
}

int cmd_sweep(const ExperimentConfig& c, std::ostream& log) {
  const DeformationPath path = build_path(c);
  const auto out = prepare_out(c);
  const std::vector<double>& grid = c.path->t_grid;
  SampleConfig base_cfg = c.sampling;
  base_cfg.jobs = c.jobs;

  // Gap columns and the crossing come from the global sampling; checks are
  // grouped by their own sampling and merged back in config order.
  SweepResult res = sweep_deformation(path, grid, {}, c.sweep_k, base_cfg);
  std::vector<CheckSpec> specs;
  for (const CheckEntry& e : c.checks) specs.push_back(e.spec);
  res.checks = specs;
  for (SweepRow& row : res.rows) row.reports.resize(specs.size());
  std::vector<bool> done(c.checks.size(), false);
  for (size_t i = 0; i < c.checks.size(); ++i) {
    if (done[i]) continue;
    const std::string key = sample_config_json(c.checks[i].cfg).dump();
    std::vector<size_t> group;
    std::vector<CheckSpec> group_specs;
    for (size_t j = i; j < c.checks.size(); ++j)
      if (!done[j] && sample_config_json(c.checks[j].cfg).dump() == key) {
        group.push_back(j);
        group_specs.push_back(c.checks[j].spec);
        done[j] = true;
      }
    const SweepResult part = sweep_deformation(path, grid, group_specs, c.sweep_k, c.checks[i].cfg);
    for (size_t r = 0; r < res.rows.size(); ++r)
      for (size_t g = 0; g < group.size(); ++g) res.rows[r].reports[group[g]] = part.rows[r].reports[g];
  }
  summarize_sweep(res);

  const int d = path.base.dim;
  std::string csv = "t";
  for (int k = 1; k < d; ++k) csv += ",min_log_gap_k" + std::to_string(k);
  for (const CheckSpec& s : specs) csv += "," + file_stem(s);
  csv += "\n";
  for (const SweepRow& row : res.rows) {
    csv += csv_double(row.t);
    for (double g : row.min_log_gap) csv += "," + csv_double(g);
    for (const CheckReport& r : row.reports) csv += std::string(",") + verdict_name(r.verdict);
    csv += "\n";
  }
  write_file(out / "sweep.csv", csv);

  json columns = json::array();
  for (size_t s = 0; s < specs.size(); ++s) {
    json counts{{"pass", 0}, {"fail", 0}, {"indeterminate", 0}};
    std::optional<double> first_fail;
    for (const SweepRow& row : res.rows) {
      counts[verdict_name(row.reports[s].verdict)] = counts[verdict_name(row.reports[s].verdict)].get<int>() + 1;
      if (!first_fail && row.reports[s].verdict == Verdict::Fail) first_fail = row.t;
    }
    columns.push_back(json{{"column", file_stem(specs[s])},
                           {"check", check_label(specs[s])},
                           {"verdicts", counts},
                           {"first_fail_t", first_fail ? number(*first_fail) : json(nullptr)}});
  }
  const json summary{{"command", "sweep"},
                     {"representation", path.base.label},
                     {"dim", d},
                     {"k", c.sweep_k},
                     {"t0", res.t0 ? number(*res.t0) : json(nullptr)},
                     {"t0_grid", res.t0_grid ? number(*res.t0_grid) : json(nullptr)},
                     {"crossings", res.crossings},
                     {"gaps_monotone", res.gaps_monotone},
                     {"failure_order", res.failure_order},
                     {"columns", columns},
                     {"config", c.to_json()}};
  write_file(out / "sweep_summary.json", summary.dump(2) + "\n");
  log << "sweep over " << grid.size() << " values of t, k=" << c.sweep_k << ": ";
  if (res.t0)
    log << "t0 ~ " << fmt17(*res.t0) << " (" << res.crossings << " crossing" << (res.crossings == 1 ? "" : "s") << ")\n";
  else
    log << "no crossing\n";
  return 0;
}

int cmd_crosstable(const ExperimentConfig& c, std::ostream& log) {
  const MarkedRep rep = build_rep(c.representation);
  const int d = rep.dim, k = c.crosstable.k;
  if (k < 1 || k >= d) fail(ErrorCode::IndexOutOfRange, "crosstable k outside 1..d-1");
  const auto out = prepare_out(c);
  SampleConfig cfg = c.sampling;
  cfg.jobs = c.jobs;
  CheckContext ctx(rep, cfg);
  std::vector<int> J{k, d - k};
  std::sort(J.begin(), J.end());
  J.erase(std::unique(J.begin(), J.end()), J.end());
  const SampleSet& s = ctx.samples(J);
  const auto idx = ctx.spread(J, static_cast<size_t>(cfg.max_samples));
  const MarkedGroup& group = rep.group();

  std::string csv =
      "word_x,word_y,word_z,word_w,angle_x,angle_y,angle_z,angle_w,cr_sign,cr_log_abs,cr_value,status,"
      "cyclically_ordered\n";
  long rows = 0, ordered_below = 0, unordered_below = 0;
  const size_t m = idx.size();
  auto emit = [&](size_t a, size_t b, size_t z, size_t w) {
    const BoundarySample *x = &s.samples[a], *y = &s.samples[b], *zz = &s.samples[z], *ww = &s.samples[w];
    const bool ordered = cyclically_ordered({x->angle, y->angle, zz->angle, ww->angle});
    std::string status = "ok";
    double sign = 0, lg = 0, value = 0;
    try {
      const CrossRatio cr = cross_ratio_k(x->flag.piece(k), y->flag.piece(d - k), zz->flag.piece(d - k),
                                          ww->flag.piece(k), cfg.tol);
      if (cr.infinite) {
        status = "infinite";
        sign = 1;
        lg = value = std::numeric_limits<double>::infinity();
      } else if (cr.zero) {
        status = "zero";
        lg = -std::numeric_limits<double>::infinity();
      } else {
        sign = cr.sign;
        lg = cr.log_abs;
        value = cr.value();
      }
    } catch (const Error&) {
      status = "undefined";
      sign = lg = value = std::numeric_limits<double>::quiet_NaN();
    }
    if (status != "undefined" && !(sign > 0 && lg > 0)) ++(ordered ? ordered_below : unordered_below);
    csv += group.to_string(x->word) + "," + group.to_string(y->word) + "," + group.to_string(zz->word) + "," +
           group.to_string(ww->word) + "," + csv_double(x->angle) + "," + csv_double(y->angle) + "," +
           csv_double(zz->angle) + "," + csv_double(ww->angle) + "," + csv_double(sign) + "," + csv_double(lg) +
           "," + csv_double(value) + "," + status + "," + (ordered ? "1" : "0") + "\n";
    ++rows;
  };
  for (size_t a = 0; a < m && rows < c.crosstable.max_rows; ++a)
    for (size_t b = a + 1; b < m && rows < c.crosstable.max_rows; ++b)
      for (size_t e = b + 1; e < m && rows < c.crosstable.max_rows; ++e)
        for (size_t f = e + 1; f < m && rows < c.crosstable.max_rows; ++f) {
          const std::size_t q[4] = {idx[a], idx[b], idx[e], idx[f]};
          for (int r = 0; r < 4 && rows < c.crosstable.max_rows; ++r) {
            const size_t x = q[r], y = q[(r + 1) % 4], z = q[(r + 2) % 4], w = q[(r + 3) % 4];
            emit(x, y, z, w);
            if (c.crosstable.include_reversed && rows < c.crosstable.max_rows) emit(x, z, y, w);
          }
        }
  write_file(out / "crosstable.csv", csv);
  const json summary{{"command", "crosstable"},
                     {"representation", rep.label},
                     {"dim", d},
                     {"k", k},
                     {"samples", m},
                     {"rows", rows},
                     {"ordered_rows_not_above_one", ordered_below},
                     {"unordered_rows_not_above_one", unordered_below},
                     {"config", c.to_json()}};
  write_file(out / "crosstable_summary.json", summary.dump(2) + "\n");
  log << rows << " quadruples from " << m << " boundary samples; " << ordered_below
      << " cyclically ordered rows with cr <= 1\n";
  return 0;
}

int run_command(const std::string& command, const ExperimentConfig& c, std::ostream& log, std::ostream& err) {
  try {
    if (command == "check") return cmd_check(c, log);
    if (command == "sweep") return cmd_sweep(c, log);
    if (command == "crosstable") return cmd_crosstable(c, log);
    err << "unknown command '" << command << "'\n";
    return 64;
  } catch (const Error& e) {
    err << error_code_name(e.code()) << ": " << e.what() << "\n";
    return exit_code(e);
  }
}

}  // namespace kpos::cli
