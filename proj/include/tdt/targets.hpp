#pragma once

// Ground-truth target generators and bias families.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "tdt/core.hpp"
#include "tdt/rng.hpp"

namespace tdt {

namespace detail {

template <class Rng>
Label random_label(Rng& rng) {
  return (rng() >> 63) ? Label::positive : Label::negative;
}

/// Uniform choice among the coordinates of [n] not fixed by `path`.
template <class Rng>
std::size_t random_free_coordinate(std::size_t n, const Restriction& path, Rng& rng) {
  const auto free = path.free_coordinates(n);
  if (free.empty()) throw InvalidArgument("no free coordinate left on this path");
  return free[uniform_below(rng, free.size())];
}

/// Whether two trees agree on every input, enumerating only the variables
/// either one queries.
inline bool same_function(const DecisionTree& a, const DecisionTree& b, std::size_t n) {
  std::vector<std::size_t> vars;
  for (std::size_t v = 0; v < n; ++v)
    if (a.uses_variable(v) || b.uses_variable(v)) vars.push_back(v);
  if (vars.size() > 24) return a == b;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << vars.size()); ++m) {
    BitVector x(n);
    for (std::size_t k = 0; k < vars.size(); ++k) x.set(vars[k], (m >> k) & 1U);
    if (a.route(x) != b.route(x)) return false;
  }
  return true;
}

/// Complete tree of the given depth below `path`; the two leaves under each
/// bottom node carry opposite labels and the two subtrees of every node
/// compute different functions, so no split is vacuous.
template <class Rng>
DecisionTree balanced_below(std::size_t depth, std::size_t n, const Restriction& path, Rng& rng) {
  if (depth == 0) return DecisionTree::make_leaf(random_label(rng));
  const std::size_t var = random_free_coordinate(n, path, rng);
  if (depth == 1) {
    const Label y = random_label(rng);
    return DecisionTree::make_internal(var, DecisionTree::make_leaf(y), DecisionTree::make_leaf(negate(y)));
  }
  DecisionTree lo = balanced_below(depth - 1, n, path.with(var, false), rng);
  for (int attempt = 0; attempt < 64; ++attempt) {
    DecisionTree hi = balanced_below(depth - 1, n, path.with(var, true), rng);
    if (!same_function(lo, hi, n)) return DecisionTree::make_internal(var, lo, hi);
  }
  throw InvalidArgument("could not draw distinct subtrees");
}

/// Chain over the given variables, each node with one leaf child on a random
/// side, ending in `tail`. Leaf labels alternate down the chain starting
/// opposite to `first`.
template <class Rng>
DecisionTree spine(const std::vector<std::size_t>& vars, Label first, DecisionTree tail, Rng& rng) {
  DecisionTree t = std::move(tail);
  for (std::size_t k = vars.size(); k-- > 0;) {
    const Label y = (k % 2 == 0) ? first : negate(first);
    DecisionTree leaf = DecisionTree::make_leaf(y);
    t = (rng() >> 63) ? DecisionTree::make_internal(vars[k], leaf, t) : DecisionTree::make_internal(vars[k], t, leaf);
  }
  return t;
}

template <class Rng>
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[uniform_below(rng, i)]);
  return p;
}

}  // namespace detail

/// Complete binary tree of depth `depth` over distinct variables on every path.
template <class Rng>
DecisionTree generate_balanced_target(std::size_t depth, std::size_t n, Rng& rng) {
  if (depth > n) throw InvalidArgument("balanced depth " + std::to_string(depth) + " exceeds dimension " +
                                       std::to_string(n));
  return detail::balanced_below(depth, n, Restriction{}, rng);
}

/// Chain of n internal nodes over a random variable order with n+1 leaves.
/// Each node's leaf child sits on a random side; labels alternate along the
/// chain and the two bottom leaves differ.
template <class Rng>
DecisionTree generate_path_target(std::size_t n, Rng& rng) {
  if (n < 1) throw InvalidArgument("path target needs n >= 1");
  const auto order = detail::random_permutation(n, rng);
  const Label first = detail::random_label(rng);
  const std::vector<std::size_t> chain(order.begin(), order.end() - 1);
  // The bottom node's two leaves continue the alternation.
  const Label y = (chain.size() % 2 == 0) ? first : negate(first);
  DecisionTree bottom = (rng() >> 63)
                            ? DecisionTree::make_internal(order.back(), DecisionTree::make_leaf(y),
                                                          DecisionTree::make_leaf(negate(y)))
                            : DecisionTree::make_internal(order.back(), DecisionTree::make_leaf(negate(y)),
                                                          DecisionTree::make_leaf(y));
  return detail::spine(chain, first, std::move(bottom), rng);
}

/// Depth of the complete tail used by generate_unbalanced_target: the
/// smallest t >= 1 with leaves - 2^t + t <= n, so that the spine of
/// leaves - 2^t nodes plus the tail fits on one path.
inline std::size_t unbalanced_tail_depth(std::size_t leaves, std::size_t n) {
  if (leaves < 2) throw InvalidArgument("unbalanced target needs at least 2 leaves");
  for (std::size_t t = 1; (std::size_t{1} << t) <= leaves; ++t) {
    if (leaves - (std::size_t{1} << t) + t <= n) return t;
  }
  throw InvalidArgument("no chain-like tree with " + std::to_string(leaves) + " leaves fits in dimension " +
                        std::to_string(n));
}

/// Chain-like tree with exactly `leaves` leaves: a spine of single-leaf
/// nodes ending in a complete tail. With enough coordinates (leaves <= n+1)
/// the tail has depth 1 and the result is a path tree.
template <class Rng>
DecisionTree generate_unbalanced_target(std::size_t leaves, std::size_t n, Rng& rng) {
  const std::size_t t = unbalanced_tail_depth(leaves, n);
  const std::size_t s = leaves - (std::size_t{1} << t);
  const auto order = detail::random_permutation(n, rng);
  const std::vector<std::size_t> chain(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
  Restriction used;
  for (std::size_t v : chain) used = used.with(v, false);
  DecisionTree tail = detail::balanced_below(t, n, used, rng);
  return detail::spine(chain, detail::random_label(rng), std::move(tail), rng);
}

/// Random tree of depth at most `max_depth`; each node below the cap
/// becomes internal with probability 3/4.
template <class Rng>
DecisionTree generate_random_tree(std::size_t n, std::size_t max_depth, Rng& rng) {
  if (max_depth > n) throw InvalidArgument("max depth exceeds dimension");
  auto rec = [&](auto& self, const Restriction& path, std::size_t remaining) -> DecisionTree {
    if (remaining == 0 || uniform_below(rng, 4) == 0) return DecisionTree::make_leaf(detail::random_label(rng));
    const std::size_t var = detail::random_free_coordinate(n, path, rng);
    DecisionTree lo = self(self, path.with(var, false), remaining - 1);
    DecisionTree hi = self(self, path.with(var, true), remaining - 1);
    return DecisionTree::make_internal(var, lo, hi);
  };
  return rec(rec, Restriction{}, max_depth);
}

/// Uniformly random truth table, represented by the complete tree querying
/// coordinates 0..n-1 in order.
template <class Rng>
DecisionTree generate_truth_table(std::size_t n, Rng& rng) {
  auto rec = [&](auto& self, std::size_t var) -> DecisionTree {
    if (var == n) return DecisionTree::make_leaf(detail::random_label(rng));
    DecisionTree lo = self(self, var + 1);
    DecisionTree hi = self(self, var + 1);
    return DecisionTree::make_internal(var, lo, hi);
  };
  return rec(rec, 0);
}

inline DecisionTree constant_target(Label y) { return DecisionTree::make_leaf(y); }

/// Biases drawn independently from [lo, hi].
template <class Rng>
ProductDistribution random_biases(std::size_t n, Rng& rng, double lo = 0.1, double hi = 0.9) {
  std::vector<double> p(n);
  for (double& v : p) v = lo + (hi - lo) * uniform01(rng);
  return ProductDistribution(std::move(p));
}

}  // namespace tdt
