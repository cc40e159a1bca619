#pragma once

// Top-down greedy induction with exact influences: repeatedly split the leaf
// of highest score on its most influential coordinate until the f-completion
// is an epsilon-approximation of f.

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdt/exact.hpp"

namespace tdt {

/// Maximum and average depth of a tree computing the target.
struct TreeDepths {
  double max_depth = 0.0;
  double average_depth = 0.0;
};

template <class V>
TreeDepths depths_of(const Tree<V>& tree, const ProductDistribution& dist) {
  return {static_cast<double>(max_depth(tree)), average_depth(tree, dist)};
}

/// Natural log of max((e*Delta/(eps*D))^(Delta*D), e^(Delta*D)), the size
/// guarantee for a target computed by a tree of depth D and average depth Delta.
inline double log_size_bound(double epsilon, TreeDepths d) {
  const double exponent = d.average_depth * d.max_depth;
  if (exponent <= 0.0) return 0.0;
  const double base = std::log(std::exp(1.0) * d.average_depth / (epsilon * d.max_depth));
  return exponent * std::max(base, 1.0);
}

inline double size_bound(double epsilon, TreeDepths d) { return std::exp(log_size_bound(epsilon, d)); }

struct GreedyStep {
  /// j: number of leaves before this split.
  std::size_t step = 0;
  LeafId leaf;
  std::size_t coordinate = 0;
  double score = 0.0;
  double cost_before = 0.0;
  double cost_after = 0.0;
  /// Error of the f-completion of the tree before this split.
  double error_before = 0.0;
  std::size_t leaf_count = 0;
};

struct GreedyTrace {
  std::vector<GreedyStep> steps;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double final_error = 0.0;
};

struct ExactBuildOptions {
  double epsilon = 0.1;
  /// Defaults to the size guarantee at `ground_truth` when given, else 2^n.
  std::optional<std::size_t> max_splits;
  std::optional<TreeDepths> ground_truth;
  ExactOptions exact;
};

struct ExactBuildResult {
  DecisionTree tree;
  BareTree bare;
  GreedyTrace trace;
  /// False when max_splits ran out before the error reached epsilon.
  bool terminated = false;
};

inline std::size_t default_max_splits(std::size_t n, const std::optional<TreeDepths>& gt, double epsilon) {
  const double cube = std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(n, 62)));
  double limit = cube;
  if (gt) limit = std::min(limit, std::floor(size_bound(epsilon, *gt)));
  return static_cast<std::size_t>(std::max(limit, 1.0));
}

template <BooleanFunction F>
ExactBuildResult build_topdown_exact(const F& f, const ProductDistribution& dist, const ExactBuildOptions& opts) {
  if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
  const std::size_t n = dist.dimension();
  if (n > opts.exact.enumeration_cap) throw EnumerationBudgetExceeded(n, opts.exact.enumeration_cap);
  const std::size_t max_splits = opts.max_splits.value_or(default_max_splits(n, opts.ground_truth, opts.epsilon));

  BareTree bare;
  // Scores of untouched leaves never change, so each leaf is scored once.
  std::map<LeafId, ScoreResult> scored;
  scored.emplace(LeafId{0}, score_at(Restriction{}, f, dist, opts.exact));
  auto current_cost = [&] {
    double c = 0.0;
    for (const auto& [id, s] : scored) c += s.reach * s.total_influence;
    return c;
  };

  ExactBuildResult result;
  result.trace.initial_cost = current_cost();
  for (;;) {
    const DecisionTree completion = f_completion(bare, f, dist, opts.exact.enumeration_cap);
    const double err = tree_error(completion, f, dist, opts.exact.enumeration_cap);
    if (err <= opts.epsilon) {
      result.tree = completion;
      result.terminated = true;
      result.trace.final_error = err;
      break;
    }
    if (result.trace.steps.size() >= max_splits) {
      result.tree = completion;
      result.trace.final_error = err;
      break;
    }

    double best = -1.0;
    for (const auto& [id, s] : scored) best = std::max(best, s.score);
    auto chosen = scored.end();
    for (auto it = scored.begin(); it != scored.end(); ++it) {
      if (it->second.score >= best - kTieTolerance && it->second.coordinate) {
        chosen = it;
        break;
      }
    }
    // error <= cost, so a positive error implies some leaf has positive score.
    if (chosen == scored.end() || !(chosen->second.score > 0.0))
      throw std::logic_error("f-completion error exceeds epsilon but every leaf has score 0");

    GreedyStep step;
    step.step = bare.size();
    step.leaf = chosen->first;
    step.coordinate = *chosen->second.coordinate;
    step.score = chosen->second.score;
    step.cost_before = current_cost();
    step.error_before = err;

    const LeafId lo = bare.next_id();
    const LeafId hi{lo.value + 1};
    const Restriction parent = bare.path_of(step.leaf);
    bare = bare.split(step.leaf, step.coordinate);
    scored.erase(chosen);
    scored.emplace(lo, score_at(parent.with(step.coordinate, false), f, dist, opts.exact));
    scored.emplace(hi, score_at(parent.with(step.coordinate, true), f, dist, opts.exact));

    step.cost_after = current_cost();
    step.leaf_count = step.step;
    result.trace.steps.push_back(step);
  }
  result.bare = bare;
  result.trace.final_cost = current_cost();
  return result;
}

inline std::string trace_csv(const GreedyTrace& trace) {
  auto g = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out = "step,leaf,coordinate,score,cost_before,cost_after,error_before,leaf_count\n";
  for (const auto& s : trace.steps)
    out += std::to_string(s.step) + ',' + std::to_string(s.leaf.value) + ',' + std::to_string(s.coordinate) + ',' +
           g(s.score) + ',' + g(s.cost_before) + ',' + g(s.cost_after) + ',' + g(s.error_before) + ',' +
           std::to_string(s.leaf_count) + '\n';
  return out;
}

}  // namespace tdt
