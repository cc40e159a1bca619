#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tdt/exact.hpp"
#include "tdt/targets.hpp"

using namespace tdt;

namespace {

DecisionTree leaf(int y) { return DecisionTree::make_leaf(label_from_int(y)); }
DecisionTree node(std::size_t v, const DecisionTree& lo, const DecisionTree& hi) {
  return DecisionTree::make_internal(v, lo, hi);
}

const DecisionTree kConstant = leaf(1);
const DecisionTree kDictator = node(0, leaf(-1), leaf(1));
// +1 exactly when x0 = x1 = 1.
const DecisionTree kAnd = node(0, leaf(-1), node(1, leaf(-1), leaf(1)));
const DecisionTree kParity = node(0, node(1, leaf(-1), leaf(1)), node(1, leaf(1), leaf(-1)));

template <class F>
SubfunctionView<F> whole(const F& f, std::size_t n) {
  return SubfunctionView<F>(f, n);
}

}  // namespace

TEST(Influence, Examples) {
  const auto u1 = ProductDistribution::uniform(1);
  const auto u2 = ProductDistribution::uniform(2);
  EXPECT_EQ(influence(whole(kConstant, 2), u2, 0), 0.0);
  EXPECT_DOUBLE_EQ(influence(whole(kDictator, 1), u1, 0), 0.5);
  EXPECT_DOUBLE_EQ(influence(whole(kAnd, 2), u2, 0), 0.25);
}

TEST(Influence, RestrictedCoordinateIsExactlyZero) {
  const auto u = ProductDistribution::uniform(2);
  const SubfunctionView<DecisionTree> v(kParity, 2, Restriction{}.with(0, true));
  EXPECT_EQ(influence(v, u, 0), 0.0);
  EXPECT_DOUBLE_EQ(influence(v, u, 1), 0.5);
}

TEST(Influence, Errors) {
  const auto u = ProductDistribution::uniform(2);
  EXPECT_THROW((void)influence(whole(kAnd, 2), u, 2), DimensionMismatch);
  EXPECT_THROW((void)influence(whole(kAnd, 2), ProductDistribution::uniform(3), 0), DimensionMismatch);
  const auto big = ProductDistribution::uniform(10);
  ExactOptions tight;
  tight.enumeration_cap = 4;
  EXPECT_THROW((void)influence(whole(kAnd, 10), big, 0, tight), EnumerationBudgetExceeded);
}

TEST(Influence, ClosedFormMatchesDefinitionalEnumeration) {
  SplitMix64 rng(21);
  for (int k = 0; k < 60; ++k) {
    const std::size_t n = 1 + uniform_below(rng, 6);
    const auto t = generate_random_tree(n, n, rng);
    const auto d = random_biases(n, rng);
    const std::vector<double> p(d.biases().begin(), d.biases().end());
    const auto f = oracle::from_tree(t, n);
    Restriction r;
    std::vector<std::pair<std::size_t, int>> rr;
    if (n > 1 && uniform_below(rng, 2)) {
      r = r.with(n - 1, true);
      rr.push_back({n - 1, 1});
    }
    const SubfunctionView<DecisionTree> view(t, n, r);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_NEAR(influence(view, d, i), oracle::rerandomized_influence(f, p, i, rr), 1e-12);
  }
}

TEST(Influence, NormalizationsDifferByTheirFactors) {
  const ProductDistribution d({0.3});
  const auto v = whole(kDictator, 1);
  EXPECT_NEAR(influence(v, d, 0, {kDefaultEnumerationCap, InfluenceNormalization::rerandomized}), 0.42, 1e-15);
  EXPECT_NEAR(influence(v, d, 0, {kDefaultEnumerationCap, InfluenceNormalization::flip}), 1.0, 1e-15);
  EXPECT_NEAR(influence(v, d, 0, {kDefaultEnumerationCap, InfluenceNormalization::variance}), 0.84, 1e-15);
}

TEST(TotalInfluence, Examples) {
  const auto u2 = ProductDistribution::uniform(2);
  EXPECT_EQ(total_influence(whole(kConstant, 2), u2), 0.0);
  EXPECT_DOUBLE_EQ(total_influence(whole(kDictator, 2), u2), 0.5);
  EXPECT_DOUBLE_EQ(total_influence(whole(kParity, 2), u2), 1.0);
}

TEST(Variance, Examples) {
  EXPECT_EQ(variance(whole(kConstant, 1), ProductDistribution::uniform(1)), 0.0);
  EXPECT_DOUBLE_EQ(variance(whole(kDictator, 1), ProductDistribution::uniform(1)), 1.0);
  EXPECT_NEAR(variance(whole(kDictator, 1), ProductDistribution({0.3})), 0.84, 1e-15);
}

TEST(LeafError, Examples) {
  EXPECT_EQ(leaf_error(whole(kConstant, 1), ProductDistribution::uniform(1)), 0.0);
  EXPECT_DOUBLE_EQ(leaf_error(whole(kDictator, 1), ProductDistribution::uniform(1)), 0.5);
  EXPECT_NEAR(leaf_error(whole(kDictator, 1), ProductDistribution({0.3})), 0.3, 1e-15);
}

TEST(Conditional, MatchesOracle) {
  SplitMix64 rng(4);
  for (int k = 0; k < 40; ++k) {
    const std::size_t n = 2 + uniform_below(rng, 4);
    const auto t = generate_random_tree(n, n, rng);
    const auto d = random_biases(n, rng);
    const std::vector<double> p(d.biases().begin(), d.biases().end());
    const SubfunctionView<DecisionTree> view(t, n, Restriction{}.with(0, false));
    const double m = oracle::positive(oracle::from_tree(t, n), p, {{0, 0}});
    EXPECT_NEAR(positive_mass(view, d), m, 1e-12);
    EXPECT_NEAR(variance(view, d), 4 * m * (1 - m), 1e-12);
    EXPECT_NEAR(leaf_error(view, d), std::min(m, 1 - m), 1e-12);
  }
}

TEST(Score, Examples) {
  const auto u2 = ProductDistribution::uniform(2);
  const BareTree root;
  const auto s = score(root, LeafId{0}, kDictator, u2);
  EXPECT_DOUBLE_EQ(s.score, 0.5);
  EXPECT_EQ(s.coordinate, 0u);

  const BareTree split = root.split(LeafId{0}, 0);
  const auto c = score(split, LeafId{1}, kDictator, u2);
  EXPECT_EQ(c.score, 0.0);
  EXPECT_EQ(c.coordinate, 1u);  // lowest free coordinate

  const auto p = score(root, LeafId{0}, kParity, u2);
  EXPECT_DOUBLE_EQ(p.score, 0.5);
  EXPECT_EQ(p.coordinate, 0u);  // tie broken to the lowest index

  EXPECT_THROW((void)score(root, LeafId{7}, kParity, u2), UnknownLeaf);
}

TEST(Score, IncludesReachProbability) {
  const ProductDistribution d({0.3, 0.5});
  const BareTree b = BareTree().split(LeafId{0}, 0);
  const auto s = score(b, LeafId{2}, kParity, d);
  EXPECT_NEAR(s.reach, 0.3, 1e-15);
  EXPECT_NEAR(s.score, 0.3 * 0.5, 1e-15);
}

TEST(Cost, Examples) {
  const auto u2 = ProductDistribution::uniform(2);
  const BareTree b = BareTree().split(LeafId{0}, 1).split(LeafId{1}, 0);
  EXPECT_EQ(cost(b, kConstant, u2), 0.0);
  EXPECT_DOUBLE_EQ(cost(BareTree(), kDictator, u2), 0.5);
  EXPECT_EQ(cost(BareTree().split(LeafId{0}, 0), kDictator, u2), 0.0);
}

TEST(Cost, SplitOnArgmaxDropsCostByScore) {
  SplitMix64 rng(12);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 1 + uniform_below(rng, 5);
    const auto t = generate_random_tree(n, n, rng);
    const auto d = random_biases(n, rng);
    BareTree b;
    for (int step = 0; step < 4; ++step) {
      const auto ids = b.leaf_ids();
      const LeafId l = ids[uniform_below(rng, ids.size())];
      const auto s = score(b, l, t, d);
      if (!s.coordinate) break;
      const double before = cost(b, t, d);
      b = b.split(l, *s.coordinate);
      EXPECT_NEAR(cost(b, t, d), before - s.score, 1e-10);
    }
  }
}

TEST(FCompletion, Examples) {
  EXPECT_EQ(f_completion(BareTree(), kConstant, ProductDistribution::uniform(1)), kConstant);
  // Under p=0.3 the 0-branch (label -1) carries mass 0.7.
  EXPECT_EQ(f_completion(BareTree(), kDictator, ProductDistribution({0.3})), leaf(-1));
  const auto split = f_completion(BareTree().split(LeafId{0}, 0), kDictator, ProductDistribution({0.3}));
  EXPECT_EQ(split, kDictator);
  EXPECT_EQ(tree_error(split, kDictator, ProductDistribution({0.3})), 0.0);
}

TEST(FCompletion, TiesGoToPlusOne) {
  EXPECT_EQ(f_completion(BareTree(), kDictator, ProductDistribution::uniform(1)), leaf(1));
}

TEST(FCompletion, MinimizesErrorOverAllLabelings) {
  SplitMix64 rng(31);
  for (int k = 0; k < 30; ++k) {
    const std::size_t n = 2 + uniform_below(rng, 3);
    const auto t = generate_random_tree(n, n, rng);
    const auto d = random_biases(n, rng);
    const std::vector<double> p(d.biases().begin(), d.biases().end());
    BareTree b = BareTree().split(LeafId{0}, 0).split(LeafId{1}, 1);
    const auto ids = b.leaf_ids();
    const double best = tree_error(f_completion(b, t, d), t, d);
    EXPECT_NEAR(best, completion_error(b, t, d), 1e-12);
    for (unsigned mask = 0; mask < (1U << ids.size()); ++mask) {
      const auto labeled = b.label_with([&](LeafId id) {
        const auto pos = std::find(ids.begin(), ids.end(), id) - ids.begin();
        return ((mask >> pos) & 1U) ? Label::positive : Label::negative;
      });
      EXPECT_LE(best, oracle::disagreement(oracle::from_tree(t, n), oracle::from_tree(labeled, n), p) + 1e-12);
    }
  }
}

TEST(TreeError, Examples) {
  const auto u1 = ProductDistribution::uniform(1);
  EXPECT_EQ(tree_error(kDictator, kDictator, u1), 0.0);
  EXPECT_DOUBLE_EQ(tree_error(leaf(1), kDictator, u1), 0.5);
  EXPECT_NEAR(tree_error(leaf(1), kDictator, ProductDistribution({0.3})), 0.7, 1e-15);
  EXPECT_NEAR(tree_error(leaf(-1), kDictator, ProductDistribution({0.3})), 0.3, 1e-15);
}

TEST(TreeError, MatchesOracleAndRespectsCap) {
  SplitMix64 rng(2);
  for (int k = 0; k < 30; ++k) {
    const std::size_t n = 1 + uniform_below(rng, 6);
    const auto f = generate_random_tree(n, n, rng);
    const auto g = generate_random_tree(n, n, rng);
    const auto d = random_biases(n, rng);
    const std::vector<double> p(d.biases().begin(), d.biases().end());
    EXPECT_NEAR(tree_error(g, f, d), oracle::disagreement(oracle::from_tree(f, n), oracle::from_tree(g, n), p),
                1e-12);
  }
  EXPECT_THROW((void)tree_error(kDictator, kDictator, ProductDistribution::uniform(25)), EnumerationBudgetExceeded);
}

TEST(Invariance, LeafIdRelabelingLeavesQuantitiesUnchanged) {
  const auto d = ProductDistribution({0.2, 0.7, 0.4});
  const auto f = node(2, kParity, kAnd);
  const BareTree a = BareTree().split(LeafId{0}, 1).split(LeafId{2}, 0);
  const BareTree b(a.shape().transform_leaves<LeafId>([](const auto& n) { return LeafId{n.leaf.value + 100}; }));
  EXPECT_DOUBLE_EQ(cost(a, f, d), cost(b, f, d));
  EXPECT_DOUBLE_EQ(completion_error(a, f, d), completion_error(b, f, d));
  EXPECT_EQ(f_completion(a, f, d), f_completion(b, f, d));
  EXPECT_DOUBLE_EQ(score(a, LeafId{1}, f, d).score, score(b, LeafId{101}, f, d).score);
}
