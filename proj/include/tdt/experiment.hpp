#pragma once

// Experiment driver: config parsing, the (target x n x eps x bias x rep)
// sweep over the sample-based builder, CSV emission, and the property suite.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tdt/verify.hpp"

namespace tdt {

inline constexpr const char* kExperimentCsvHeader = "# tdt-experiment-csv v1";
inline constexpr const char* kSummaryCsvHeader = "# tdt-summary-csv v1";
inline constexpr const char* kTimingCsvHeader = "# tdt-timing-csv v1";
inline constexpr const char* kPropertyCsvHeader = "# tdt-properties-csv v1";

enum class ExperimentKind { size_vs_epsilon, size_vs_n, properties, single_run };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::size_vs_epsilon: return "size-vs-epsilon";
    case ExperimentKind::size_vs_n: return "size-vs-n";
    case ExperimentKind::properties: return "properties";
    case ExperimentKind::single_run: return "single-run";
  }
  return "?";
}

/// A ground-truth family with its parameters.
struct TargetSpec {
  enum class Family { balanced, path, unbalanced, random_tree, truth_table, constant };
  Family family = Family::balanced;
  std::size_t depth = 3;
  std::size_t leaves = 8;
  Label label = Label::positive;

  /// Short CSV-safe name, e.g. "balanced-d3" or "unbalanced-l16".
  std::string name() const {
    switch (family) {
      case Family::balanced: return "balanced-d" + std::to_string(depth);
      case Family::path: return "path";
      case Family::unbalanced: return "unbalanced-l" + std::to_string(leaves);
      case Family::random_tree: return "random_tree-d" + std::to_string(depth);
      case Family::truth_table: return "truth_table";
      case Family::constant: return label == Label::positive ? "constant+1" : "constant-1";
    }
    return "?";
  }

  template <class Rng>
  DecisionTree generate(std::size_t n, Rng& rng) const {
    switch (family) {
      case Family::balanced: return generate_balanced_target(depth, n, rng);
      case Family::path: return generate_path_target(n, rng);
      case Family::unbalanced: return generate_unbalanced_target(leaves, n, rng);
      case Family::random_tree: return generate_random_tree(n, std::min(depth, n), rng);
      case Family::truth_table: return generate_truth_table(n, rng);
      case Family::constant: return constant_target(label);
    }
    throw InvalidArgument("unknown target family");
  }
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::single_run;
  std::vector<std::size_t> n;
  std::vector<double> epsilons;
  double delta = 0.1;
  std::vector<double> biases{0.5};
  std::vector<TargetSpec> targets;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 1;
  bool halve_epsilon = false;
  std::size_t max_splits = 4096;
  /// Instance count for the properties experiment.
  std::size_t count = 200;
  /// FNV-1a of the canonical JSON of every field except out and threads.
  std::uint64_t hash = 0;

  void validate() const {
    if (repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    for (double e : epsilons)
      if (!(e > 0.0 && e < 1.0)) throw InvalidArgument("every epsilon must lie in (0,1)");
    for (double p : biases)
      if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("every bias must lie in (0,1)");
    for (std::size_t d : n)
      if (d < 1 || d > kMaxSampledDimension) throw InvalidArgument("n out of range: " + std::to_string(d));
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
    if (experiment == ExperimentKind::properties) return;
    if (n.empty() || epsilons.empty() || biases.empty() || targets.empty())
      throw InvalidArgument("n, epsilons, biases and targets must be nonempty");
    if (experiment == ExperimentKind::single_run &&
        (n.size() != 1 || epsilons.size() != 1 || biases.size() != 1 || targets.size() != 1))
      throw InvalidArgument("single-run takes exactly one n, epsilon, bias and target");
  }
};

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::size_vs_epsilon, ExperimentKind::size_vs_n, ExperimentKind::properties,
                 ExperimentKind::single_run})
    if (s == to_string(k)) return k;
  throw FormatError("unknown experiment kind '" + s + "'");
}

inline TargetSpec parse_target(const nlohmann::json& j) {
  TargetSpec t;
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "balanced") {
    t.family = TargetSpec::Family::balanced;
    t.depth = j.value("depth", std::size_t{3});
  } else if (fam == "path") {
    t.family = TargetSpec::Family::path;
  } else if (fam == "unbalanced") {
    t.family = TargetSpec::Family::unbalanced;
    t.leaves = j.value("leaves", std::size_t{8});
  } else if (fam == "random_tree") {
    t.family = TargetSpec::Family::random_tree;
    t.depth = j.value("max_depth", std::size_t{3});
  } else if (fam == "truth_table") {
    t.family = TargetSpec::Family::truth_table;
  } else if (fam == "constant") {
    t.family = TargetSpec::Family::constant;
    t.label = label_from_int(j.value("label", 1));
  } else {
    throw FormatError("unknown target family '" + fam + "'");
  }
  return t;
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

}  // namespace detail

/// Parses the JSON experiment config. Accepted keys: experiment, n (int or
/// list), epsilons (or epsilon), delta, biases (or bias), targets (or
/// target), repetitions, seed, out, threads, halve_epsilon, max_splits, count.
inline ExperimentConfig parse_experiment_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  ExperimentConfig c;
  try {
    c.experiment = detail::parse_kind(j.value("experiment", std::string("single-run")));
    if (j.contains("n")) c.n = detail::scalar_or_list<std::size_t>(j["n"]);
    if (j.contains("epsilons")) c.epsilons = detail::scalar_or_list<double>(j["epsilons"]);
    if (j.contains("epsilon")) c.epsilons = detail::scalar_or_list<double>(j["epsilon"]);
    c.delta = j.value("delta", 0.1);
    if (j.contains("biases")) c.biases = detail::scalar_or_list<double>(j["biases"]);
    if (j.contains("bias")) c.biases = detail::scalar_or_list<double>(j["bias"]);
    const char* tkey = j.contains("targets") ? "targets" : "target";
    if (j.contains(tkey)) {
      const auto& t = j[tkey];
      if (t.is_array()) {
        for (const auto& e : t) c.targets.push_back(detail::parse_target(e));
      } else {
        c.targets.push_back(detail::parse_target(t));
      }
    }
    c.repetitions = j.value("repetitions", std::size_t{1});
    c.seed = j.value("seed", std::uint64_t{0});
    c.out = j.value("out", std::string());
    c.threads = j.value("threads", std::size_t{1});
    c.halve_epsilon = j.value("halve_epsilon", false);
    c.max_splits = j.value("max_splits", std::size_t{4096});
    c.count = j.value("count", std::size_t{200});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config field: ") + e.what());
  }
  nlohmann::json canon = j;
  canon.erase("out");
  canon.erase("threads");
  c.hash = fnv1a64(canon.dump());
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

struct ExperimentRow {
  std::string experiment;
  std::size_t target_index = 0;
  std::string target;
  std::size_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double bias = 0.0;
  std::size_t repetition = 0;
  std::uint64_t run_seed = 0;
  std::uint64_t config_hash = 0;
  std::size_t ground_truth_size = 0;
  std::size_t recovered_size = 0;
  std::size_t splits = 0;
  bool terminated = false;
  /// NaN when the dimension exceeds the exact cap or the run failed.
  double exact_error = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t label_queries = 0;
  std::uint64_t random_draws = 0;
  std::string status = "ok";
  double wall_seconds = 0.0;

  auto key() const { return std::tie(target_index, n, epsilon, bias, repetition); }
  bool within_epsilon() const { return !std::isnan(exact_error) && exact_error <= epsilon; }
};

struct SummaryRow {
  std::string experiment;
  std::string target;
  std::size_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double bias = 0.0;
  std::size_t runs = 0;
  double mean_ground_truth_size = 0.0;
  double mean_size = 0.0;
  double sd_size = 0.0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double within_epsilon_fraction = 0.0;
  double mean_label_queries = 0.0;
  double mean_random_draws = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<SummaryRow> summary;
};

namespace detail {

inline std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

inline ExperimentRow run_point(const ExperimentConfig& c, std::size_t ti, std::size_t n, double eps, double bias,
                               std::size_t rep) {
  ExperimentRow row;
  row.experiment = to_string(c.experiment);
  row.target_index = ti;
  row.target = c.targets[ti].name();
  row.n = n;
  row.epsilon = eps;
  row.delta = c.delta;
  row.bias = bias;
  row.repetition = rep;
  row.config_hash = c.hash;
  row.run_seed = derive_seed(c.seed, {ti, n, std::bit_cast<std::uint64_t>(eps), std::bit_cast<std::uint64_t>(bias),
                                      rep});
  const auto start = std::chrono::steady_clock::now();
  try {
    SplitMix64 target_rng(derive_seed(row.run_seed, {0}));
    const DecisionTree target = c.targets[ti].generate(n, target_rng);
    const ProductDistribution dist = ProductDistribution::constant(n, bias);
    row.ground_truth_size = target.size();
    PracticalOptions opts;
    opts.epsilon = eps;
    opts.delta = c.delta;
    opts.seed = derive_seed(row.run_seed, {1});
    opts.max_splits = c.max_splits;
    opts.halve_epsilon = c.halve_epsilon;
    const auto built = build_topdown_practical(TargetOracle::from_tree(target, dist), opts);
    row.recovered_size = built.tree.size();
    row.splits = built.trace.size();
    row.terminated = built.terminated;
    row.label_queries = built.label_queries;
    row.random_draws = built.random_draws;
    if (n <= kDefaultEnumerationCap) row.exact_error = tree_error(built.tree, target, dist);
    if (!built.terminated) row.status = "max_splits";
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    std::replace(row.status.begin(), row.status.end(), ',', ';');
    std::replace(row.status.begin(), row.status.end(), '\n', ' ');
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Runs fn(k) for k in [0, count) on `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) fn(k);
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
}

}  // namespace detail

/// Mean and sample standard deviation per (target, n, eps, bias) point,
/// computed from the given rows; rows with a failed run are skipped.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows) {
  std::vector<SummaryRow> out;
  for (std::size_t a = 0; a < rows.size();) {
    std::size_t b = a;
    while (b < rows.size() && rows[b].target_index == rows[a].target_index && rows[b].n == rows[a].n &&
           rows[b].epsilon == rows[a].epsilon && rows[b].bias == rows[a].bias)
      ++b;
    SummaryRow s;
    s.experiment = rows[a].experiment;
    s.target = rows[a].target;
    s.n = rows[a].n;
    s.epsilon = rows[a].epsilon;
    s.delta = rows[a].delta;
    s.bias = rows[a].bias;
    std::vector<double> gt, size, err, lq, rd;
    std::size_t within = 0;
    for (std::size_t k = a; k < b; ++k) {
      const auto& r = rows[k];
      if (r.status.rfind("error", 0) == 0) continue;
      gt.push_back(static_cast<double>(r.ground_truth_size));
      size.push_back(static_cast<double>(r.recovered_size));
      if (!std::isnan(r.exact_error)) err.push_back(r.exact_error);
      lq.push_back(static_cast<double>(r.label_queries));
      rd.push_back(static_cast<double>(r.random_draws));
      if (r.within_epsilon()) ++within;
    }
    s.runs = size.size();
    s.mean_ground_truth_size = detail::mean_sd(gt).first;
    std::tie(s.mean_size, s.sd_size) = detail::mean_sd(size);
    std::tie(s.mean_error, s.sd_error) = detail::mean_sd(err);
    s.within_epsilon_fraction =
        s.runs ? static_cast<double>(within) / static_cast<double>(s.runs) : std::numeric_limits<double>::quiet_NaN();
    s.mean_label_queries = detail::mean_sd(lq).first;
    s.mean_random_draws = detail::mean_sd(rd).first;
    out.push_back(s);
    a = b;
  }
  return out;
}

/// Runs every grid point and repetition. Rows come back sorted by
/// (target, n, epsilon, bias, repetition) whatever the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  if (c.experiment == ExperimentKind::properties)
    throw InvalidArgument("the properties experiment runs through run_property_suite");
  struct Point {
    std::size_t ti, n;
    double eps, bias;
    std::size_t rep;
  };
  std::vector<Point> points;
  for (std::size_t ti = 0; ti < c.targets.size(); ++ti)
    for (std::size_t n : c.n)
      for (double eps : c.epsilons)
        for (double bias : c.biases)
          for (std::size_t rep = 0; rep < c.repetitions; ++rep) points.push_back({ti, n, eps, bias, rep});

  ExperimentResult result;
  result.rows.resize(points.size());
  detail::parallel_for(points.size(), c.threads, [&](std::size_t k) {
    const Point& p = points[k];
    result.rows[k] = detail::run_point(c, p.ti, p.n, p.eps, p.bias, p.rep);
  });
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ExperimentRow& a, const ExperimentRow& b) { return a.key() < b.key(); });
  result.summary = summarize(result.rows);
  return result;
}

/// Raw rows. Wall time is left out so the file is byte-reproducible.
inline std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string s = std::string(kExperimentCsvHeader) + "\n";
  s += "experiment,target,n,epsilon,delta,bias,repetition,run_seed,config_hash,ground_truth_size,recovered_size,"
       "splits,terminated,exact_error,within_epsilon,label_queries,random_draws,status\n";
  for (const auto& r : rows) {
    s += r.experiment + ',' + r.target + ',' + std::to_string(r.n) + ',' + detail::g17(r.epsilon) + ',' +
         detail::g17(r.delta) + ',' + detail::g17(r.bias) + ',' + std::to_string(r.repetition) + ',' +
         std::to_string(r.run_seed) + ',' + std::to_string(r.config_hash) + ',' + std::to_string(r.ground_truth_size) +
         ',' + std::to_string(r.recovered_size) + ',' + std::to_string(r.splits) + ',' +
         (r.terminated ? "1" : "0") + ',' + detail::g17(r.exact_error) + ',' + (r.within_epsilon() ? "1" : "0") +
         ',' + std::to_string(r.label_queries) + ',' + std::to_string(r.random_draws) + ',' + r.status + '\n';
  }
  return s;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = std::string(kSummaryCsvHeader) + "\n";
  s += "experiment,target,n,epsilon,delta,bias,runs,mean_ground_truth_size,mean_size,sd_size,mean_error,sd_error,"
       "within_epsilon_fraction,mean_label_queries,mean_random_draws\n";
  for (const auto& r : rows) {
    s += r.experiment + ',' + r.target + ',' + std::to_string(r.n) + ',' + detail::g17(r.epsilon) + ',' +
         detail::g17(r.delta) + ',' + detail::g17(r.bias) + ',' + std::to_string(r.runs) + ',' +
         detail::g17(r.mean_ground_truth_size) + ',' + detail::g17(r.mean_size) + ',' + detail::g17(r.sd_size) + ',' +
         detail::g17(r.mean_error) + ',' + detail::g17(r.sd_error) + ',' + detail::g17(r.within_epsilon_fraction) +
         ',' + detail::g17(r.mean_label_queries) + ',' + detail::g17(r.mean_random_draws) + '\n';
  }
  return s;
}

inline std::string timing_csv(const std::vector<ExperimentRow>& rows) {
  std::string s = std::string(kTimingCsvHeader) + "\n";
  s += "target,n,epsilon,bias,repetition,run_seed,wall_seconds\n";
  for (const auto& r : rows)
    s += r.target + ',' + std::to_string(r.n) + ',' + detail::g17(r.epsilon) + ',' + detail::g17(r.bias) + ',' +
         std::to_string(r.repetition) + ',' + std::to_string(r.run_seed) + ',' + detail::g17(r.wall_seconds) + '\n';
  return s;
}

/// "results.csv" -> "results.<tag>.csv".
inline std::filesystem::path sibling_path(const std::filesystem::path& out, const std::string& tag) {
  std::filesystem::path p = out;
  const std::string ext = p.has_extension() ? p.extension().string() : std::string(".csv");
  p.replace_extension();
  p += "." + tag + ext;
  return p;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

/// Writes the rows to `out`, the aggregates to out.summary.csv and wall
/// times to out.timing.csv.
inline void write_experiment(const ExperimentResult& r, const std::filesystem::path& out) {
  write_file(out, experiment_csv(r.rows));
  write_file(sibling_path(out, "summary"), summary_csv(r.summary));
  write_file(sibling_path(out, "timing"), timing_csv(r.rows));
}

// ---------------------------------------------------------------------------
// Property suite

enum class CheckSeverity { hard, statistical, probe };

struct PropertyRow {
  std::string check;
  std::uint64_t instance_seed = 0;
  CheckSeverity severity = CheckSeverity::hard;
  bool passed = true;
  std::size_t evaluated = 0;
  std::size_t violations = 0;
  std::string detail;
  std::string witness;
  std::string witness_path;
};

struct PropertySuiteResult {
  std::vector<PropertyRow> rows;
  std::vector<NormalizationOutcome> normalizations;
  std::size_t hard_failures = 0;
  std::size_t statistical_flags = 0;
  std::size_t probe_failures = 0;
  /// 0 when every hard check passed, 2 otherwise.
  int exit_status = 0;
};

struct PropertySuiteOptions {
  std::size_t max_n = 6;
  /// Every `unbiasedness_stride`-th instance also runs the Monte Carlo check.
  std::size_t unbiasedness_stride = 10;
  std::size_t unbiasedness_resamples = 200;
  std::size_t unbiasedness_pairs = 1000;
  bool probe_normalizations = true;
};

/// Runs every checker on `count` generated instances. Violations of the
/// bound and identity checks are hard failures; the Monte Carlo check flags
/// and the max-influence bound (a normalization probe) are reported but do
/// not set the exit status.
inline PropertySuiteResult run_property_suite(std::uint64_t seed, std::size_t count,
                                              const PropertySuiteOptions& opts = {}) {
  PropertySuiteResult res;
  const InstanceGenerator gen(seed, opts.max_n);
  constexpr double kEpsilons[] = {0.05, 0.1, 0.2, 0.3};
  auto add = [&](const CheckReport& r, CheckSeverity sev) {
    PropertyRow row{r.check, r.seed, sev, r.passed(), r.evaluated, r.violations, r.detail, r.witness, ""};
    if (!row.passed) {
      if (sev == CheckSeverity::hard) ++res.hard_failures;
      if (sev == CheckSeverity::statistical) ++res.statistical_flags;
      if (sev == CheckSeverity::probe) ++res.probe_failures;
    }
    res.rows.push_back(std::move(row));
  };
  for (std::size_t k = 0; k < count; ++k) {
    const Instance inst = gen.generate(k);
    add(check_error_below_cost(inst), CheckSeverity::hard);
    add(check_influence_vs_depth(inst), CheckSeverity::hard);
    add(check_influence_vs_error(inst), CheckSeverity::hard);
    add(check_max_influence_lower(inst), CheckSeverity::probe);

    const double eps = kEpsilons[k % 4];
    const TreeDepths gt = depths_of(inst.target, inst.dist);
    ExactBuildOptions bo;
    bo.epsilon = eps;
    bo.ground_truth = gt;
    const auto built = build_topdown_exact(inst.target, inst.dist, bo);
    add(check_cost_telescoping(built.trace, inst.target, inst.dist, {}, inst.seed), CheckSeverity::hard);
    const auto sb = check_score_bounds(built.trace, gt, eps, inst.seed, inst.serialize());
    add(sb.high_error, CheckSeverity::hard);
    add(sb.high_cost, CheckSeverity::hard);
    CheckReport size = check_size_bound(built.tree.size(), eps, gt, inst.seed, inst.serialize());
    if (!built.terminated) size.fail("greedy build hit max_splits before reaching epsilon", inst.serialize());
    add(size, CheckSeverity::hard);

    if (opts.unbiasedness_stride > 0 && k % opts.unbiasedness_stride == 0)
      add(check_estimator_unbiasedness(inst, opts.unbiasedness_resamples, opts.unbiasedness_pairs).report,
          CheckSeverity::statistical);
  }
  if (opts.probe_normalizations && count > 0) res.normalizations = probe_normalizations(seed, count, 0.3, opts.max_n);
  res.exit_status = res.hard_failures > 0 ? 2 : 0;
  return res;
}

inline const char* to_string(CheckSeverity s) {
  switch (s) {
    case CheckSeverity::hard: return "hard";
    case CheckSeverity::statistical: return "statistical";
    case CheckSeverity::probe: return "probe";
  }
  return "?";
}

/// CSV of (check, instance seed, severity, pass/fail, evaluated, violations, witness file).
inline std::string property_csv(const PropertySuiteResult& r) {
  std::string s = std::string(kPropertyCsvHeader) + "\n";
  s += "check,instance_seed,severity,result,evaluated,violations,witness\n";
  for (const auto& row : r.rows)
    s += row.check + ',' + std::to_string(row.instance_seed) + ',' + to_string(row.severity) + ',' +
         (row.passed ? "pass" : "fail") + ',' + std::to_string(row.evaluated) + ',' + std::to_string(row.violations) +
         ',' + row.witness_path + '\n';
  return s;
}

/// Line-oriented report: one line per failing check, per-check totals, and
/// the normalization probe table.
inline std::string property_report(const PropertySuiteResult& r) {
  std::string s;
  std::vector<std::string> names;
  for (const auto& row : r.rows)
    if (std::find(names.begin(), names.end(), row.check) == names.end()) names.push_back(row.check);
  for (const auto& name : names) {
    std::size_t runs = 0, failed = 0, evaluated = 0;
    CheckSeverity sev = CheckSeverity::hard;
    for (const auto& row : r.rows) {
      if (row.check != name) continue;
      ++runs;
      evaluated += row.evaluated;
      sev = row.severity;
      if (!row.passed) ++failed;
    }
    s += name + " (" + to_string(sev) + "): " + std::to_string(runs - failed) + "/" + std::to_string(runs) +
         " instances pass, " + std::to_string(evaluated) + " assertions\n";
  }
  for (const auto& row : r.rows)
    if (!row.passed)
      s += "FAIL " + row.check + " seed=" + std::to_string(row.instance_seed) + ": " + row.detail + "\n";
  for (const auto& o : r.normalizations) {
    s += std::string("normalization ") + to_string(o.normalization) + ": error_below_cost " +
         std::to_string(o.error_below_cost.violations) + ", influence_vs_depth " +
         std::to_string(o.influence_vs_depth.violations) + ", max_influence_lower " +
         std::to_string(o.max_influence_lower.violations) + ", influence_vs_error " +
         std::to_string(o.influence_vs_error.violations) + " violations; dictator max_influence_lower " +
         (o.dictator_max_influence ? "holds" : "fails") + "; all checks " + (o.all_hold() ? "hold" : "do not hold") +
         "\n";
  }
  s += "hard failures: " + std::to_string(r.hard_failures) + ", statistical flags: " +
       std::to_string(r.statistical_flags) + ", probe failures: " + std::to_string(r.probe_failures) + "\n";
  return s;
}

/// Writes the CSV to `out`, the text report to out.report.txt and each
/// counterexample to out.witness/<check>-<seed>.json.
inline void write_property_suite(PropertySuiteResult& r, const std::filesystem::path& out) {
  std::filesystem::path dir = out;
  dir.replace_extension();
  dir += ".witness";
  for (auto& row : r.rows) {
    if (row.passed || row.witness.empty()) continue;
    const auto path = dir / (row.check + "-" + std::to_string(row.instance_seed) + ".json");
    write_file(path, row.witness + "\n");
    row.witness_path = path.string();
  }
  write_file(out, property_csv(r));
  std::filesystem::path report = out;
  report.replace_extension(".report.txt");
  write_file(report, property_report(r));
}

}  // namespace tdt
