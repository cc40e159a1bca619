#pragma once

// Brute-force checkers for the identities and inequalities that relate
// error, cost, score, influence, variance and depth, plus a Monte Carlo
// check of the pair-sample score estimator.

#include <cmath>
#include <cstdio>
#include <string>
#include <tuple>
#include <vector>

#include "tdt/exact.hpp"
#include "tdt/greedy_exact.hpp"
#include "tdt/practical.hpp"
#include "tdt/targets.hpp"
#include "tdt/tree_io.hpp"

namespace tdt {

/// Slack for exact identities and inequalities between enumerated quantities.
inline constexpr double kIdentityTolerance = 1e-10;

/// A target together with the distribution it is evaluated under.
struct Instance {
  std::uint64_t seed = 0;
  std::string family;
  DecisionTree target;
  ProductDistribution dist = ProductDistribution::uniform(1);

  /// {"family":..., "seed":..., "target":<tree>, "dist":<distribution>}, for replay.
  std::string serialize() const {
    return std::string("{\"family\":\"") + family + "\",\"seed\":" + std::to_string(seed) +
           ",\"target\":" + serialize_tree(target) + ",\"dist\":" + serialize_distribution(dist) + "}";
  }
};

enum class TargetFamily { truth_table, random_tree, balanced, path };
enum class BiasFamily { uniform, fixed, random };

inline const char* to_string(TargetFamily f) {
  switch (f) {
    case TargetFamily::truth_table: return "truth_table";
    case TargetFamily::random_tree: return "random_tree";
    case TargetFamily::balanced: return "balanced";
    case TargetFamily::path: return "path";
  }
  return "?";
}

/// Reproducible stream of small instances. Instance k depends only on
/// (seed, k), so any single instance can be regenerated on its own.
class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed, std::size_t max_n = 6, BiasFamily bias = BiasFamily::random,
                             double fixed_bias = 0.3)
      : seed_(seed), max_n_(max_n), bias_(bias), fixed_bias_(fixed_bias) {
    if (max_n_ < 1 || max_n_ > 8) throw InvalidArgument("instance dimension must lie in [1, 8]");
    if (!(fixed_bias_ > 0.0 && fixed_bias_ < 1.0)) throw InvalidArgument("fixed bias must lie in (0,1)");
  }

  Instance generate(std::size_t k) const { return generate(k, static_cast<TargetFamily>(k % 4)); }

  Instance generate(std::size_t k, TargetFamily family) const {
    Instance inst;
    inst.seed = derive_seed(seed_, {k});
    SplitMix64 rng(inst.seed);
    const std::size_t n = 1 + uniform_below(rng, max_n_);
    switch (family) {
      case TargetFamily::truth_table: inst.target = generate_truth_table(n, rng); break;
      case TargetFamily::random_tree: inst.target = generate_random_tree(n, 1 + uniform_below(rng, n), rng); break;
      case TargetFamily::balanced:
        inst.target = generate_balanced_target(uniform_below(rng, std::min<std::size_t>(n, 3) + 1), n, rng);
        break;
      case TargetFamily::path: inst.target = generate_path_target(n, rng); break;
    }
    inst.family = to_string(family);
    switch (bias_) {
      case BiasFamily::uniform: inst.dist = ProductDistribution::uniform(n); break;
      case BiasFamily::fixed: inst.dist = ProductDistribution::constant(n, fixed_bias_); break;
      case BiasFamily::random: inst.dist = random_biases(n, rng); break;
    }
    return inst;
  }

 private:
  std::uint64_t seed_;
  std::size_t max_n_;
  BiasFamily bias_;
  double fixed_bias_;
};

struct CheckReport {
  CheckReport() = default;
  CheckReport(std::string name, std::uint64_t instance_seed) : check(std::move(name)), seed(instance_seed) {}

  std::string check;
  std::uint64_t seed = 0;
  std::size_t evaluated = 0;
  std::size_t violations = 0;
  /// First violation, human readable.
  std::string detail;
  /// Serialized counterexample for the first violation.
  std::string witness;

  bool passed() const noexcept { return violations == 0; }

  void fail(std::string what, std::string replay) {
    if (violations++ == 0) {
      detail = std::move(what);
      witness = std::move(replay);
    }
  }
  void merge(const CheckReport& other) {
    evaluated += other.evaluated;
    if (other.violations > 0 && violations == 0) {
      detail = other.detail;
      witness = other.witness;
    }
    violations += other.violations;
  }
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Calls fn(path, subtree) for the root and for every internal node of the
/// target, where subtree computes f restricted to that node's region.
template <class Fn>
void for_each_region(const DecisionTree& target, Fn&& fn) {
  auto rec = [&](auto& self, DecisionTree::Index at, const Restriction& path) -> void {
    const auto& node = target.node(at);
    if (node.is_leaf()) return;
    fn(path, restrict_tree(target, path));
    self(self, node.lo, path.with(static_cast<std::size_t>(node.var), false));
    self(self, node.hi, path.with(static_cast<std::size_t>(node.var), true));
  };
  fn(Restriction{}, target);
  const auto& root = target.root();
  if (root.is_leaf()) return;
  rec(rec, root.lo, Restriction{}.with(static_cast<std::size_t>(root.var), false));
  rec(rec, root.hi, Restriction{}.with(static_cast<std::size_t>(root.var), true));
}

/// Conditional average depth of `sub` in the region `path`, where sub is
/// the target restricted to that region (coordinates on the path are never queried).
inline double region_average_depth(const DecisionTree& sub, const ProductDistribution& dist) {
  return average_depth(sub, dist);
}

/// Replays the first `count` splits of a trace onto a root-only bare tree.
inline BareTree replay(const GreedyTrace& trace, std::size_t count) {
  BareTree bare;
  for (std::size_t s = 0; s < count; ++s) bare = bare.split(trace.steps[s].leaf, trace.steps[s].coordinate);
  return bare;
}

}  // namespace detail

/// error(f-completion) <= cost for every prefix of the greedy trace of the instance.
inline CheckReport check_error_below_cost(const Instance& inst, double epsilon = 0.01, const ExactOptions& opts = {}) {
  CheckReport r{"error_below_cost", inst.seed};
  ExactBuildOptions bo;
  bo.epsilon = epsilon;
  bo.exact = opts;
  const auto built = build_topdown_exact(inst.target, inst.dist, bo);
  for (std::size_t k = 0; k <= built.trace.steps.size(); ++k) {
    const BareTree bare = detail::replay(built.trace, k);
    const double err = completion_error(bare, inst.target, inst.dist, opts.enumeration_cap);
    const double c = cost(bare, inst.target, inst.dist, opts);
    ++r.evaluated;
    if (err > c + kIdentityTolerance)
      r.fail("prefix " + std::to_string(k) + ": error " + detail::fmt(err) + " > cost " + detail::fmt(c),
             inst.serialize());
  }
  return r;
}

/// Inf(f_v) <= D(T_v) Var(f_v) and Inf(f_v) <= Delta(T_v) for f and every
/// subfunction at an internal node of the target tree.
inline CheckReport check_influence_vs_depth(const Instance& inst, const ExactOptions& opts = {}) {
  CheckReport r{"influence_vs_depth", inst.seed};
  detail::for_each_region(inst.target, [&](const Restriction& path, const DecisionTree& sub) {
    const SubfunctionView<DecisionTree> view(inst.target, inst.dist.dimension(), path);
    const double inf = total_influence(view, inst.dist, opts);
    const double var = variance(view, inst.dist, opts.enumeration_cap);
    const double d = static_cast<double>(max_depth(sub));
    const double delta = detail::region_average_depth(sub, inst.dist);
    r.evaluated += 2;
    if (inf > d * var + kIdentityTolerance)
      r.fail("Inf " + detail::fmt(inf) + " > D*Var " + detail::fmt(d * var), inst.serialize());
    if (inf > delta + kIdentityTolerance)
      r.fail("Inf " + detail::fmt(inf) + " > Delta " + detail::fmt(delta), inst.serialize());
  });
  return r;
}

/// max_i Inf_i(f_v) >= Var(f_v) / Delta(T_v) for f and every internal-node subfunction.
inline CheckReport check_max_influence_lower(const Instance& inst, const ExactOptions& opts = {}) {
  CheckReport r{"max_influence_lower", inst.seed};
  detail::for_each_region(inst.target, [&](const Restriction& path, const DecisionTree& sub) {
    const SubfunctionView<DecisionTree> view(inst.target, inst.dist.dimension(), path);
    const double var = variance(view, inst.dist, opts.enumeration_cap);
    const double delta = detail::region_average_depth(sub, inst.dist);
    ++r.evaluated;
    if (delta <= 0.0) return;  // a leaf: Var = 0 and the bound is vacuous
    double best = 0.0;
    for (double v : influences(view, inst.dist, opts)) best = std::max(best, v);
    if (best < var / delta - kIdentityTolerance)
      r.fail("max Inf " + detail::fmt(best) + " < Var/Delta " + detail::fmt(var / delta), inst.serialize());
  });
  return r;
}

/// Inf_i(f_v) <= 2 error(f_v) <= Var(f_v) for every coordinate, on f and
/// every internal-node subfunction.
inline CheckReport check_influence_vs_error(const Instance& inst, const ExactOptions& opts = {}) {
  CheckReport r{"influence_vs_error", inst.seed};
  detail::for_each_region(inst.target, [&](const Restriction& path, const DecisionTree&) {
    const SubfunctionView<DecisionTree> view(inst.target, inst.dist.dimension(), path);
    const double err = leaf_error(view, inst.dist, opts.enumeration_cap);
    const double var = variance(view, inst.dist, opts.enumeration_cap);
    const auto inf = influences(view, inst.dist, opts);
    for (std::size_t i = 0; i < inf.size(); ++i) {
      ++r.evaluated;
      if (inf[i] > 2.0 * err + kIdentityTolerance)
        r.fail("Inf_" + std::to_string(i) + " " + detail::fmt(inf[i]) + " > 2*error " + detail::fmt(2.0 * err),
               inst.serialize());
    }
    ++r.evaluated;
    if (2.0 * err > var + kIdentityTolerance)
      r.fail("2*error " + detail::fmt(2.0 * err) + " > Var " + detail::fmt(var), inst.serialize());
  });
  return r;
}

/// Per-step cost_after = cost_before - score, consecutive steps chain, and
/// the sum of chosen scores equals initial minus final cost.
inline CheckReport check_cost_telescoping(const GreedyTrace& trace, std::uint64_t seed = 0) {
  CheckReport r{"cost_telescoping", seed};
  double total = 0.0;
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& st = trace.steps[s];
    total += st.score;
    ++r.evaluated;
    if (std::abs(st.cost_after - (st.cost_before - st.score)) > kIdentityTolerance)
      r.fail("step " + std::to_string(s) + ": cost_after " + detail::fmt(st.cost_after) + " != cost_before - score " +
                 detail::fmt(st.cost_before - st.score),
             "");
    if (s > 0 && std::abs(st.cost_before - trace.steps[s - 1].cost_after) > kIdentityTolerance)
      r.fail("step " + std::to_string(s) + ": cost does not chain", "");
  }
  ++r.evaluated;
  if (std::abs(total - (trace.initial_cost - trace.final_cost)) > kIdentityTolerance)
    r.fail("sum of scores " + detail::fmt(total) + " != initial - final cost " +
               detail::fmt(trace.initial_cost - trace.final_cost),
           "");
  return r;
}

/// As above, and additionally recomputes the cost of every replayed prefix
/// from scratch so the trace's recorded costs are checked independently.
template <BooleanFunction F>
CheckReport check_cost_telescoping(const GreedyTrace& trace, const F& f, const ProductDistribution& dist,
                                   const ExactOptions& opts = {}, std::uint64_t seed = 0) {
  CheckReport r = check_cost_telescoping(trace, seed);
  for (std::size_t k = 0; k <= trace.steps.size(); ++k) {
    const double recorded = k < trace.steps.size() ? trace.steps[k].cost_before : trace.final_cost;
    const double fresh = cost(detail::replay(trace, k), f, dist, opts);
    ++r.evaluated;
    if (std::abs(recorded - fresh) > kIdentityTolerance)
      r.fail("prefix " + std::to_string(k) + ": recorded cost " + detail::fmt(recorded) + " != recomputed " +
                 detail::fmt(fresh),
             "");
  }
  return r;
}

struct ScoreBoundsReport {
  /// Score >= 2 eps / (j Delta_opt) at steps whose completion error exceeds eps.
  CheckReport high_error;
  /// Score >= cost / (j D_opt Delta_opt) at every step.
  CheckReport high_cost;

  bool passed() const noexcept { return high_error.passed() && high_cost.passed(); }
};

/// Per-step lower bounds on the chosen score of a greedy-exact trace.
inline ScoreBoundsReport check_score_bounds(const GreedyTrace& trace, TreeDepths ground_truth, double epsilon,
                                            std::uint64_t seed = 0, const std::string& witness = "") {
  ScoreBoundsReport r{{"score_high_error", seed}, {"score_high_cost", seed}};
  const double dd = ground_truth.max_depth * ground_truth.average_depth;
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& st = trace.steps[s];
    const double j = static_cast<double>(st.step);
    const std::string where = "step " + std::to_string(s) + " (j=" + std::to_string(st.step) + "): score ";
    if (st.error_before > epsilon && ground_truth.average_depth > 0.0) {
      ++r.high_error.evaluated;
      const double bound = 2.0 * epsilon / (j * ground_truth.average_depth);
      if (st.score < bound - kIdentityTolerance)
        r.high_error.fail(where + detail::fmt(st.score) + " < 2eps/(j*Delta) " + detail::fmt(bound), witness);
    }
    if (dd > 0.0) {
      ++r.high_cost.evaluated;
      const double bound = st.cost_before / (j * dd);
      if (st.score < bound - kIdentityTolerance)
        r.high_cost.fail(where + detail::fmt(st.score) + " < cost/(j*D*Delta) " + detail::fmt(bound), witness);
    }
  }
  return r;
}

/// final_size <= max((e Delta / (eps D))^(Delta D), e^(Delta D)), compared in log space.
inline CheckReport check_size_bound(std::size_t final_size, double epsilon, TreeDepths ground_truth,
                                    std::uint64_t seed = 0, const std::string& witness = "") {
  CheckReport r{"size_bound", seed};
  r.evaluated = 1;
  const double lhs = std::log(static_cast<double>(final_size));
  const double rhs = log_size_bound(epsilon, ground_truth);
  if (lhs > rhs + kIdentityTolerance)
    r.fail("size " + std::to_string(final_size) + " exceeds bound exp(" + detail::fmt(rhs) + ")", witness);
  return r;
}

struct UnbiasednessProbe {
  LeafId leaf;
  std::size_t coordinate = 0;
  double exact = 0.0;
  double mean = 0.0;
  double standard_error = 0.0;
  bool passed = false;
  bool retried = false;
};

struct UnbiasednessReport {
  CheckReport report;
  std::vector<UnbiasednessProbe> probes;
};

namespace detail {

/// R independent pair sets of the given size for coordinate i; returns the
/// per-leaf estimates, one vector of R values per leaf in `leaves`.
inline std::vector<std::vector<double>> resample_estimates(const TargetOracle& oracle, const BareTree& bare,
                                                           const std::vector<LeafId>& leaves, std::size_t i,
                                                           std::size_t R, std::size_t pair_count,
                                                           std::uint64_t seed) {
  const std::size_t n = oracle.dimension();
  std::vector<std::vector<double>> est(leaves.size(), std::vector<double>(R));
  std::vector<LabeledPair> pairs(pair_count);
  for (std::size_t rep = 0; rep < R; ++rep) {
    SplitMix64 rng(derive_seed(seed, {i, rep}));
    for (auto& p : pairs) p = draw_pair(oracle, i, rng);
    for (std::size_t l = 0; l < leaves.size(); ++l) est[l][rep] = score_estimate(pairs, i, leaves[l], bare, n);
  }
  return est;
}

inline std::pair<double, double> mean_and_standard_error(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, sd / std::sqrt(static_cast<double>(v.size()))};
}

inline bool within_band(double mean, double se, double exact) {
  if (se == 0.0) return std::abs(mean - exact) <= 1e-12;
  return std::abs(mean - exact) <= 3.0 * se;
}

}  // namespace detail

/// Random bare tree with up to `max_splits` splits on random free coordinates.
template <class Rng>
BareTree random_bare_tree(std::size_t n, std::size_t max_splits, Rng& rng) {
  BareTree bare;
  const std::size_t splits = uniform_below(rng, max_splits + 1);
  for (std::size_t s = 0; s < splits; ++s) {
    const auto ids = bare.leaf_ids();
    const LeafId id = ids[uniform_below(rng, ids.size())];
    const Restriction path = bare.path_of(id);
    if (path.size() == n) continue;
    bare = bare.split(id, detail::random_free_coordinate(n, path, rng));
  }
  return bare;
}

/// Compares the Monte Carlo mean of R pair-sample estimates with the exact
/// score p_v Inf_i(f_v) for every (leaf, coordinate) of a random bare tree.
/// A probe outside the 3-sigma band is rerun once with a fresh seed.
inline UnbiasednessReport check_estimator_unbiasedness(const Instance& inst, std::size_t R = 200,
                                                       std::size_t pair_count = 1000, std::size_t max_splits = 3) {
  UnbiasednessReport out;
  out.report = CheckReport{"estimator_unbiasedness", inst.seed};
  if (R < 2 || pair_count < 1) throw InvalidArgument("unbiasedness check needs R >= 2 and a nonempty pair set");
  const std::size_t n = inst.dist.dimension();
  SplitMix64 rng(derive_seed(inst.seed, {0x7eeULL}));
  const BareTree bare = random_bare_tree(n, max_splits, rng);
  const auto leaves = bare.leaf_ids();
  const TargetOracle oracle = TargetOracle::from_tree(inst.target, inst.dist);
  const ExactOptions rerandomized{kDefaultEnumerationCap, InfluenceNormalization::rerandomized};

  for (std::size_t i = 0; i < n; ++i) {
    const auto first = detail::resample_estimates(oracle, bare, leaves, i, R, pair_count, derive_seed(inst.seed, {1}));
    std::vector<std::vector<double>> second;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      const Restriction path = bare.path_of(leaves[l]);
      const SubfunctionView<DecisionTree> view(inst.target, n, path);
      UnbiasednessProbe probe;
      probe.leaf = leaves[l];
      probe.coordinate = i;
      probe.exact = reach_probability(inst.dist, path) * influence(view, inst.dist, i, rerandomized);
      std::tie(probe.mean, probe.standard_error) = detail::mean_and_standard_error(first[l]);
      probe.passed = detail::within_band(probe.mean, probe.standard_error, probe.exact);
      if (!probe.passed) {
        if (second.empty())
          second = detail::resample_estimates(oracle, bare, leaves, i, R, pair_count, derive_seed(inst.seed, {2}));
        probe.retried = true;
        std::tie(probe.mean, probe.standard_error) = detail::mean_and_standard_error(second[l]);
        probe.passed = detail::within_band(probe.mean, probe.standard_error, probe.exact);
      }
      ++out.report.evaluated;
      if (!probe.passed)
        out.report.fail("leaf " + std::to_string(probe.leaf.value) + " coordinate " + std::to_string(i) + ": mean " +
                            detail::fmt(probe.mean) + " vs exact " + detail::fmt(probe.exact) + " (se " +
                            detail::fmt(probe.standard_error) + ")",
                        inst.serialize() + "\n" + serialize_tree(bare));
      out.probes.push_back(probe);
    }
  }
  return out;
}

/// Outcome of the check suite under one influence normalization.
struct NormalizationOutcome {
  InfluenceNormalization normalization;
  CheckReport error_below_cost;
  CheckReport influence_vs_depth;
  CheckReport max_influence_lower;
  CheckReport influence_vs_error;
  /// Whether the max-influence lower bound holds on the dictator instance with bias `dictator_bias`.
  bool dictator_max_influence = false;

  bool all_hold() const {
    return error_below_cost.passed() && influence_vs_depth.passed() && max_influence_lower.passed() && influence_vs_error.passed();
  }
};

/// Dictator on coordinate 0 with -1 on the 0-branch.
inline Instance dictator_instance(double p) {
  Instance inst;
  inst.family = "dictator";
  inst.target = DecisionTree::make_internal(0, DecisionTree::make_leaf(Label::negative),
                                            DecisionTree::make_leaf(Label::positive));
  inst.dist = ProductDistribution({p});
  return inst;
}

/// Runs the max-influence check on the dictator and on `count` generated instances,
/// and the rest of the check suite alongside, under every normalization.
inline std::vector<NormalizationOutcome> probe_normalizations(std::uint64_t seed, std::size_t count,
                                                              double dictator_bias = 0.3, std::size_t max_n = 6) {
  std::vector<NormalizationOutcome> out;
  const InstanceGenerator gen(seed, max_n);
  for (auto norm : {InfluenceNormalization::rerandomized, InfluenceNormalization::flip,
                    InfluenceNormalization::variance}) {
    const ExactOptions opts{kDefaultEnumerationCap, norm};
    NormalizationOutcome o{norm, {"error_below_cost", seed}, {"influence_vs_depth", seed}, {"max_influence_lower", seed}, {"influence_vs_error", seed}};
    const Instance dict = dictator_instance(dictator_bias);
    o.dictator_max_influence = check_max_influence_lower(dict, opts).passed();
    for (const Instance& inst : {dict, dictator_instance(0.5)}) {
      o.max_influence_lower.merge(check_max_influence_lower(inst, opts));
      o.influence_vs_error.merge(check_influence_vs_error(inst, opts));
      o.influence_vs_depth.merge(check_influence_vs_depth(inst, opts));
      o.error_below_cost.merge(check_error_below_cost(inst, 0.01, opts));
    }
    for (std::size_t k = 0; k < count; ++k) {
      const Instance inst = gen.generate(k);
      o.max_influence_lower.merge(check_max_influence_lower(inst, opts));
      o.influence_vs_error.merge(check_influence_vs_error(inst, opts));
      o.influence_vs_depth.merge(check_influence_vs_depth(inst, opts));
      o.error_below_cost.merge(check_error_below_cost(inst, 0.01, opts));
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace tdt
