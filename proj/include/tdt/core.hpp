#pragma once

// Data model: product distributions, bit vectors, restrictions, labeled and
// bare decision trees, routing, reach probabilities and depth statistics.

#include <algorithm>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdt/errors.hpp"
#include "tdt/rng.hpp"

namespace tdt {

/// Coordinates are packed into one machine word.
inline constexpr std::size_t kMaxDimension = 64;

/// A point of {0,1}^n.
class BitVector {
 public:
  BitVector() = default;

  explicit BitVector(std::size_t n, std::uint64_t bits = 0) : n_(n), bits_(bits) {
    if (n > kMaxDimension) throw DimensionMismatch("dimension exceeds " + std::to_string(kMaxDimension));
    if (n < kMaxDimension) bits_ &= (std::uint64_t{1} << n) - 1;
  }

  BitVector(std::initializer_list<int> bits) : BitVector(bits.size()) {
    std::size_t i = 0;
    for (int b : bits) {
      if (b) bits_ |= std::uint64_t{1} << i;
      ++i;
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::uint64_t word() const noexcept { return bits_; }

  bool operator[](std::size_t i) const noexcept { return (bits_ >> i) & 1U; }

  bool at(std::size_t i) const {
    if (i >= n_) throw DimensionMismatch("coordinate " + std::to_string(i) + " out of range");
    return (*this)[i];
  }

  void set(std::size_t i, bool bit) {
    if (i >= n_) throw DimensionMismatch("coordinate " + std::to_string(i) + " out of range");
    const std::uint64_t m = std::uint64_t{1} << i;
    bits_ = bit ? (bits_ | m) : (bits_ & ~m);
  }

  BitVector with(std::size_t i, bool bit) const {
    BitVector copy = *this;
    copy.set(i, bit);
    return copy;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t n_ = 0;
  std::uint64_t bits_ = 0;
};

/// mu = mu_1 x ... x mu_n, where coordinate i is 1 with probability biases[i].
class ProductDistribution {
 public:
  explicit ProductDistribution(std::vector<double> biases) : biases_(std::move(biases)) {
    if (biases_.empty()) throw InvalidArgument("product distribution needs at least one coordinate");
    if (biases_.size() > kMaxDimension)
      throw DimensionMismatch("dimension exceeds " + std::to_string(kMaxDimension));
    for (double p : biases_) {
      // Also rejects NaN.
      if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("bias must lie strictly inside (0,1)");
    }
  }

  static ProductDistribution uniform(std::size_t n) { return constant(n, 0.5); }
  static ProductDistribution constant(std::size_t n, double p) {
    return ProductDistribution(std::vector<double>(n, p));
  }

  std::size_t dimension() const noexcept { return biases_.size(); }
  std::span<const double> biases() const noexcept { return biases_; }
  double bias(std::size_t i) const { return biases_.at(i); }

  /// Pr[x_i = bit].
  double marginal(std::size_t i, bool bit) const { return bit ? biases_.at(i) : 1.0 - biases_.at(i); }

  template <class Rng>
  bool draw_coordinate(std::size_t i, Rng& rng) const {
    return uniform01(rng) < biases_[i];
  }

  template <class Rng>
  BitVector draw(Rng& rng) const {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < biases_.size(); ++i) {
      if (uniform01(rng) < biases_[i]) bits |= std::uint64_t{1} << i;
    }
    return BitVector(biases_.size(), bits);
  }

  friend bool operator==(const ProductDistribution&, const ProductDistribution&) = default;

 private:
  std::vector<double> biases_;
};

enum class Label : std::int8_t { negative = -1, positive = 1 };

constexpr int to_int(Label y) noexcept { return static_cast<int>(y); }
constexpr Label negate(Label y) noexcept {
  return y == Label::positive ? Label::negative : Label::positive;
}
inline Label label_from_int(int v) {
  if (v == 1) return Label::positive;
  if (v == -1) return Label::negative;
  throw InvalidArgument("label must be +1 or -1, got " + std::to_string(v));
}

/// Stable leaf identifier of a bare tree.
struct LeafId {
  std::uint32_t value = 0;
  auto operator<=>(const LeafId&) const = default;
};

/// Partial assignment of coordinates, i.e. the constraints along a root-to-node path.
class Restriction {
 public:
  Restriction() = default;

  bool fixes(std::size_t i) const noexcept { return i < kMaxDimension && ((mask_ >> i) & 1U); }
  bool value(std::size_t i) const {
    if (!fixes(i)) throw InvalidArgument("coordinate " + std::to_string(i) + " is not fixed");
    return (values_ >> i) & 1U;
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(__builtin_popcountll(mask_)); }
  bool empty() const noexcept { return mask_ == 0; }
  std::uint64_t mask() const noexcept { return mask_; }
  std::uint64_t values() const noexcept { return values_; }

  Restriction with(std::size_t i, bool bit) const {
    if (i >= kMaxDimension) throw DimensionMismatch("coordinate out of range");
    if (fixes(i)) throw InvalidArgument("coordinate " + std::to_string(i) + " already fixed");
    Restriction r = *this;
    r.mask_ |= std::uint64_t{1} << i;
    if (bit) r.values_ |= std::uint64_t{1} << i;
    return r;
  }

  /// (coordinate, bit) pairs in increasing coordinate order.
  std::vector<std::pair<std::size_t, bool>> entries() const {
    std::vector<std::pair<std::size_t, bool>> out;
    for (std::uint64_t m = mask_; m != 0; m &= m - 1) {
      const auto i = static_cast<std::size_t>(__builtin_ctzll(m));
      out.emplace_back(i, (values_ >> i) & 1U);
    }
    return out;
  }

  bool admits(const BitVector& x) const noexcept { return ((x.word() ^ values_) & mask_) == 0; }

  /// Coordinates of [n] not fixed here, ascending.
  std::vector<std::size_t> free_coordinates(std::size_t n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
      if (!fixes(i)) out.push_back(i);
    return out;
  }

  friend bool operator==(const Restriction&, const Restriction&) = default;

 private:
  std::uint64_t mask_ = 0;
  std::uint64_t values_ = 0;
};

/// Binary query tree. Internal nodes query one coordinate; `lo` is taken when
/// the queried bit is 0 and `hi` when it is 1. Leaves carry a `LeafValue`
/// (a Label for decision trees, a LeafId for bare trees).
///
/// Nodes live in a flat vector with the root at index 0. Trees are values:
/// every "modification" produces a new tree.
template <class LeafValue>
class Tree {
 public:
  using leaf_type = LeafValue;
  using Index = std::int32_t;

  struct Node {
    std::int32_t var = -1;
    Index lo = -1;
    Index hi = -1;
    LeafValue leaf{};
    bool is_leaf() const noexcept { return var < 0; }
    Index child(bool bit) const noexcept { return bit ? hi : lo; }
  };

  Tree() : nodes_{Node{}} {}

  static Tree make_leaf(LeafValue v) {
    Tree t;
    t.nodes_[0].leaf = v;
    return t;
  }

  /// Root querying `var` over the two given subtrees.
  static Tree make_internal(std::size_t var, const Tree& lo, const Tree& hi) {
    if (var >= kMaxDimension) throw MalformedTree("variable index out of range");
    if (lo.uses_variable(var) || hi.uses_variable(var))
      throw MalformedTree("variable " + std::to_string(var) + " repeats on a root-to-leaf path");
    Tree t;
    t.nodes_.reserve(1 + lo.nodes_.size() + hi.nodes_.size());
    t.nodes_[0].var = static_cast<std::int32_t>(var);
    t.nodes_[0].lo = t.append(lo);
    t.nodes_[0].hi = t.append(hi);
    return t;
  }

  static constexpr Index root_index() noexcept { return 0; }
  const Node& root() const noexcept { return nodes_[0]; }
  const Node& node(Index i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  std::span<const Node> nodes() const noexcept { return nodes_; }

  /// Number of leaves.
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
  }
  std::size_t internal_count() const noexcept { return nodes_.size() - size(); }

  bool uses_variable(std::size_t var) const noexcept {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [var](const Node& n) { return n.var == static_cast<std::int32_t>(var); });
  }

  /// Largest queried coordinate plus one (0 for a single leaf).
  std::size_t min_dimension() const noexcept {
    std::int32_t m = -1;
    for (const Node& n : nodes_) m = std::max(m, n.var);
    return static_cast<std::size_t>(m + 1);
  }

  Index route_index(const BitVector& x) const {
    Index i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (static_cast<std::size_t>(n.var) >= x.size())
        throw DimensionMismatch("tree queries coordinate " + std::to_string(n.var) +
                                " of a " + std::to_string(x.size()) + "-bit input");
      i = n.child(x[static_cast<std::size_t>(n.var)]);
    }
    return i;
  }

  const LeafValue& route(const BitVector& x) const {
    return nodes_[static_cast<std::size_t>(route_index(x))].leaf;
  }

  /// Lets a labeled tree act as a Boolean function.
  const LeafValue& operator()(const BitVector& x) const { return route(x); }

  /// Visits leaves depth-first, lo before hi:
  /// fn(Index, const Node&, const Restriction& path, std::size_t depth).
  template <class Fn>
  void for_each_leaf(Fn&& fn) const {
    struct Frame {
      Index index;
      Restriction path;
      std::size_t depth;
    };
    std::vector<Frame> stack{{0, Restriction{}, 0}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      const Node& n = nodes_[static_cast<std::size_t>(f.index)];
      if (n.is_leaf()) {
        fn(f.index, n, f.path, f.depth);
        continue;
      }
      const auto v = static_cast<std::size_t>(n.var);
      stack.push_back({n.hi, f.path.with(v, true), f.depth + 1});
      stack.push_back({n.lo, f.path.with(v, false), f.depth + 1});
    }
  }

  /// Same shape, same queried variables, same leaf values.
  friend bool operator==(const Tree& a, const Tree& b) { return equal_at(a, 0, b, 0); }

  /// Copy with leaf values mapped through `fn(const Node&) -> U`.
  template <class U, class Fn>
  Tree<U> transform_leaves(Fn&& fn) const {
    std::vector<typename Tree<U>::Node> out(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      out[i].var = nodes_[i].var;
      out[i].lo = nodes_[i].lo;
      out[i].hi = nodes_[i].hi;
      if (nodes_[i].is_leaf()) out[i].leaf = fn(nodes_[i]);
    }
    return Tree<U>::from_nodes_unchecked(std::move(out));
  }

  /// Builds from a raw node array, validating indices, acyclicity, and the
  /// no-repeat-on-path invariant. Nodes unreachable from the root are dropped.
  static Tree from_nodes(std::vector<Node> raw) {
    if (raw.empty()) throw MalformedTree("empty node array");
    Tree t;
    t.nodes_.clear();
    std::vector<char> seen(raw.size(), 0);
    copy_checked(raw, 0, Restriction{}, seen, t);
    return t;
  }

  static Tree from_nodes_unchecked(std::vector<Node> nodes) {
    Tree t;
    t.nodes_ = std::move(nodes);
    return t;
  }

 private:
  template <class>
  friend class Tree;

  Index append(const Tree& sub) {
    const auto offset = static_cast<Index>(nodes_.size());
    for (Node n : sub.nodes_) {
      if (!n.is_leaf()) {
        n.lo += offset;
        n.hi += offset;
      }
      nodes_.push_back(n);
    }
    return offset;
  }

  static Index copy_checked(const std::vector<Node>& raw, Index at, Restriction path,
                            std::vector<char>& seen, Tree& out) {
    if (at < 0 || static_cast<std::size_t>(at) >= raw.size()) throw MalformedTree("child index out of range");
    if (seen[static_cast<std::size_t>(at)]) throw MalformedTree("node shared or cyclic");
    seen[static_cast<std::size_t>(at)] = 1;
    const Node& n = raw[static_cast<std::size_t>(at)];
    const auto mine = static_cast<Index>(out.nodes_.size());
    out.nodes_.push_back(n);
    if (n.is_leaf()) return mine;
    const auto v = static_cast<std::size_t>(n.var);
    if (v >= kMaxDimension) throw MalformedTree("variable index out of range");
    if (path.fixes(v)) throw MalformedTree("variable " + std::to_string(v) + " repeats on a root-to-leaf path");
    const Index lo = copy_checked(raw, n.lo, path.with(v, false), seen, out);
    const Index hi = copy_checked(raw, n.hi, path.with(v, true), seen, out);
    out.nodes_[static_cast<std::size_t>(mine)].lo = lo;
    out.nodes_[static_cast<std::size_t>(mine)].hi = hi;
    return mine;
  }

  static bool equal_at(const Tree& a, Index i, const Tree& b, Index j) {
    const Node& x = a.node(i);
    const Node& y = b.node(j);
    if (x.is_leaf() != y.is_leaf()) return false;
    if (x.is_leaf()) return x.leaf == y.leaf;
    return x.var == y.var && equal_at(a, x.lo, b, y.lo) && equal_at(a, x.hi, b, y.hi);
  }

  std::vector<Node> nodes_;
};

using DecisionTree = Tree<Label>;

/// Unlabeled tree whose leaves carry stable identifiers. Identifiers are
/// allocated monotonically and never reused: splitting leaf v removes v and
/// adds two fresh ids, every other leaf keeps its id.
class BareTree {
 public:
  BareTree() : shape_(Tree<LeafId>::make_leaf(LeafId{0})), next_id_(1) {}

  /// Adopts an explicit shape; leaf ids must be unique.
  explicit BareTree(Tree<LeafId> shape) : shape_(std::move(shape)) {
    std::vector<std::uint32_t> ids;
    for (const auto& n : shape_.nodes())
      if (n.is_leaf()) ids.push_back(n.leaf.value);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw MalformedTree("duplicate leaf id");
    next_id_ = ids.back() + 1;
  }

  const Tree<LeafId>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return shape_.size(); }
  LeafId next_id() const noexcept { return LeafId{next_id_}; }

  LeafId route(const BitVector& x) const { return shape_.route(x); }

  /// Leaf ids in ascending order.
  std::vector<LeafId> leaf_ids() const {
    std::vector<LeafId> ids;
    for (const auto& n : shape_.nodes())
      if (n.is_leaf()) ids.push_back(n.leaf);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  bool contains(LeafId id) const noexcept { return find(id) >= 0; }

  /// Restriction describing the path from the root to leaf `id`.
  Restriction path_of(LeafId id) const {
    std::optional<Restriction> found;
    shape_.for_each_leaf([&](auto, const auto& n, const Restriction& path, std::size_t) {
      if (n.leaf == id) found = path;
    });
    if (!found) throw UnknownLeaf("no leaf with id " + std::to_string(id.value));
    return *found;
  }

  std::size_t depth_of(LeafId id) const { return path_of(id).size(); }

  /// Replaces leaf `id` by a query to `var`; returns the new tree. The two
  /// children receive ids next_id() (bit 0) and next_id()+1 (bit 1).
  BareTree split(LeafId id, std::size_t var) const {
    const auto at = find(id);
    if (at < 0) throw UnknownLeaf("no leaf with id " + std::to_string(id.value));
    if (var >= kMaxDimension) throw MalformedTree("variable index out of range");
    if (path_of(id).fixes(var))
      throw MalformedTree("variable " + std::to_string(var) + " already queried on this path");
    std::vector<Tree<LeafId>::Node> nodes(shape_.nodes().begin(), shape_.nodes().end());
    const auto lo = static_cast<std::int32_t>(nodes.size());
    nodes.push_back({-1, -1, -1, LeafId{next_id_}});
    nodes.push_back({-1, -1, -1, LeafId{next_id_ + 1}});
    auto& n = nodes[static_cast<std::size_t>(at)];
    n.var = static_cast<std::int32_t>(var);
    n.lo = lo;
    n.hi = lo + 1;
    BareTree out;
    out.shape_ = Tree<LeafId>::from_nodes_unchecked(std::move(nodes));
    out.next_id_ = next_id_ + 2;
    return out;
  }

  /// Labels every leaf through `fn(LeafId) -> Label`.
  template <class Fn>
  DecisionTree label_with(Fn&& fn) const {
    return shape_.transform_leaves<Label>([&](const auto& n) { return fn(n.leaf); });
  }

  friend bool operator==(const BareTree& a, const BareTree& b) { return a.shape_ == b.shape_; }

 private:
  std::int32_t find(LeafId id) const noexcept {
    const auto nodes = shape_.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].is_leaf() && nodes[i].leaf == id) return static_cast<std::int32_t>(i);
    return -1;
  }

  Tree<LeafId> shape_;
  std::uint32_t next_id_ = 1;
};

/// Anything that maps a bit vector to a +/-1 label.
template <class F>
concept BooleanFunction = requires(const F& f, const BitVector& x) {
  { f(x) } -> std::convertible_to<Label>;
};

template <class V>
const V& route(const Tree<V>& tree, const BitVector& x) {
  return tree.route(x);
}
inline LeafId route(const BareTree& tree, const BitVector& x) { return tree.route(x); }

/// Throws unless every queried coordinate is below n.
template <class V>
void validate_dimension(const Tree<V>& tree, std::size_t n) {
  if (tree.min_dimension() > n)
    throw DimensionMismatch("tree queries coordinate " + std::to_string(tree.min_dimension() - 1) +
                            " but dimension is " + std::to_string(n));
}

/// Pr_{x~mu}[x satisfies r].
inline double reach_probability(const ProductDistribution& dist, const Restriction& r) {
  double p = 1.0;
  for (const auto& [i, bit] : r.entries()) {
    if (i >= dist.dimension())
      throw DimensionMismatch("restriction fixes coordinate " + std::to_string(i) + " of a " +
                              std::to_string(dist.dimension()) + "-dimensional distribution");
    p *= dist.marginal(i, bit);
  }
  return p;
}

/// Longest root-to-leaf edge count.
template <class V>
std::size_t max_depth(const Tree<V>& tree) {
  std::size_t d = 0;
  tree.for_each_leaf([&](auto, const auto&, const Restriction&, std::size_t depth) { d = std::max(d, depth); });
  return d;
}
inline std::size_t max_depth(const BareTree& tree) { return max_depth(tree.shape()); }

/// Sum over leaves of p_v * depth(v).
template <class V>
double average_depth(const Tree<V>& tree, const ProductDistribution& dist) {
  validate_dimension(tree, dist.dimension());
  double sum = 0.0;
  tree.for_each_leaf([&](auto, const auto&, const Restriction& path, std::size_t depth) {
    sum += reach_probability(dist, path) * static_cast<double>(depth);
  });
  return sum;
}
inline double average_depth(const BareTree& tree, const ProductDistribution& dist) {
  return average_depth(tree.shape(), dist);
}

/// Tree computing f restricted by r: nodes querying a fixed coordinate are
/// replaced by the child selected by the fixed bit.
template <class V>
Tree<V> restrict_tree(const Tree<V>& tree, const Restriction& r) {
  using Node = typename Tree<V>::Node;
  std::vector<Node> out;
  auto rec = [&](auto& self, typename Tree<V>::Index at) -> typename Tree<V>::Index {
    const Node* n = &tree.node(at);
    while (!n->is_leaf() && r.fixes(static_cast<std::size_t>(n->var)))
      n = &tree.node(n->child(r.value(static_cast<std::size_t>(n->var))));
    const auto mine = static_cast<typename Tree<V>::Index>(out.size());
    out.push_back(*n);
    if (!n->is_leaf()) {
      const Node copy = *n;
      const auto lo = self(self, copy.lo);
      const auto hi = self(self, copy.hi);
      out[static_cast<std::size_t>(mine)].lo = lo;
      out[static_cast<std::size_t>(mine)].hi = hi;
    }
    return mine;
  };
  rec(rec, 0);
  return Tree<V>::from_nodes_unchecked(std::move(out));
}

/// Query access to a hidden target: label queries f(x) and random samples x ~ mu.
class TargetOracle {
 public:
  using LabelFn = std::function<Label(const BitVector&)>;

  TargetOracle(LabelFn f, ProductDistribution dist) : f_(std::move(f)), dist_(std::move(dist)) {
    if (!f_) throw InvalidArgument("target oracle needs a label function");
  }

  static TargetOracle from_tree(DecisionTree tree, ProductDistribution dist) {
    validate_dimension(tree, dist.dimension());
    auto t = std::make_shared<const DecisionTree>(std::move(tree));
    return TargetOracle([t](const BitVector& x) { return t->route(x); }, std::move(dist));
  }

  Label label(const BitVector& x) const {
    if (x.size() != dist_.dimension()) throw DimensionMismatch("query has wrong dimension");
    return f_(x);
  }
  Label operator()(const BitVector& x) const { return label(x); }

  template <class Rng>
  BitVector draw(Rng& rng) const {
    return dist_.draw(rng);
  }

  const ProductDistribution& distribution() const noexcept { return dist_; }
  std::size_t dimension() const noexcept { return dist_.dimension(); }

 private:
  LabelFn f_;
  ProductDistribution dist_;
};

}  // namespace tdt
