#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "tdt/targets.hpp"
#include "tdt/tree_io.hpp"

using namespace tdt;

namespace {

DecisionTree leaf(int y) { return DecisionTree::make_leaf(label_from_int(y)); }
DecisionTree node(std::size_t v, const DecisionTree& lo, const DecisionTree& hi) {
  return DecisionTree::make_internal(v, lo, hi);
}

/// Path tree on coordinates 0..n-1: node k has its leaf on the 0-side.
DecisionTree left_path(std::size_t n) {
  DecisionTree t = node(n - 1, leaf(n % 2 ? 1 : -1), leaf(n % 2 ? -1 : 1));
  for (std::size_t k = n - 1; k-- > 0;) t = node(k, leaf(k % 2 ? -1 : 1), t);
  return t;
}

DecisionTree complete(std::size_t depth, std::size_t var = 0) {
  if (depth == 0) return leaf(var % 2 ? 1 : -1);
  return node(var, complete(depth - 1, var + 1), complete(depth - 1, var + 1));
}

}  // namespace

TEST(BitVector, IndexingAndBounds) {
  const BitVector x{1, 0, 1};
  EXPECT_EQ(x.size(), 3u);
  EXPECT_TRUE(x[0]);
  EXPECT_FALSE(x[1]);
  EXPECT_TRUE(x.at(2));
  EXPECT_THROW((void)x.at(3), DimensionMismatch);
  EXPECT_EQ(x.with(1, true), (BitVector{1, 1, 1}));
}

TEST(ProductDistribution, RejectsDegenerateBiases) {
  EXPECT_THROW(ProductDistribution({0.0, 0.5}), InvalidArgument);
  EXPECT_THROW(ProductDistribution({0.5, 1.0}), InvalidArgument);
  EXPECT_THROW(ProductDistribution({std::nan("")}), InvalidArgument);
  EXPECT_THROW(ProductDistribution(std::vector<double>{}), InvalidArgument);
  EXPECT_NO_THROW(ProductDistribution({0.3, 0.7}));
}

TEST(ProductDistribution, DrawMatchesBiases) {
  const ProductDistribution d({0.3, 0.8});
  SplitMix64 rng(5);
  int ones0 = 0, ones1 = 0;
  const int N = 100000;
  for (int k = 0; k < N; ++k) {
    const auto x = d.draw(rng);
    ones0 += x[0];
    ones1 += x[1];
  }
  EXPECT_NEAR(ones0 / double(N), 0.3, 0.01);
  EXPECT_NEAR(ones1 / double(N), 0.8, 0.01);
}

TEST(Route, SingleLeafReturnsThatLeaf) {
  const auto t = leaf(-1);
  EXPECT_EQ(route(t, BitVector{0, 1}), Label::negative);
  EXPECT_EQ(route(t, BitVector{1, 1}), Label::negative);
}

TEST(Route, OneDecisionTakesHiOnBitOne) {
  const BareTree b = BareTree().split(LeafId{0}, 0);
  EXPECT_EQ(route(b, BitVector{1, 0}), LeafId{2});
  EXPECT_EQ(route(b, BitVector{0, 0}), LeafId{1});
}

TEST(Route, DepthTwoHandTrace) {
  // Root x0; its 0-child queries x1. x = (0,1) goes lo then hi.
  const BareTree b = BareTree().split(LeafId{0}, 0).split(LeafId{1}, 1);
  EXPECT_EQ(route(b, BitVector{0, 1}), LeafId{4});
  EXPECT_EQ(b.path_of(LeafId{4}), Restriction{}.with(0, false).with(1, true));
}

TEST(Route, DimensionMismatchThrows) {
  const auto t = node(2, leaf(1), leaf(-1));
  EXPECT_THROW((void)route(t, BitVector{0, 1}), DimensionMismatch);
}

TEST(ReachProbability, Examples) {
  const ProductDistribution d({0.3, 0.5});
  EXPECT_DOUBLE_EQ(reach_probability(d, Restriction{}), 1.0);
  EXPECT_DOUBLE_EQ(reach_probability(d, Restriction{}.with(0, true)), 0.3);
  EXPECT_NEAR(reach_probability(d, Restriction{}.with(0, true).with(1, false)), 0.15, 1e-15);
  EXPECT_THROW((void)reach_probability(d, Restriction{}.with(2, true)), DimensionMismatch);
}

TEST(ReachProbability, AgreesWithEnumeration) {
  const std::vector<double> p{0.2, 0.65, 0.4, 0.9};
  const ProductDistribution d(p);
  const auto r = Restriction{}.with(1, true).with(3, false);
  EXPECT_NEAR(reach_probability(d, r), oracle::mass(p, {{1, 1}, {3, 0}}), 1e-15);
}

TEST(Restriction, RejectsRepeatedCoordinate) {
  const auto r = Restriction{}.with(2, true);
  EXPECT_THROW((void)r.with(2, false), InvalidArgument);
  EXPECT_EQ(r.free_coordinates(4), (std::vector<std::size_t>{0, 1, 3}));
}

TEST(AverageDepth, Examples) {
  EXPECT_EQ(average_depth(leaf(1), ProductDistribution::uniform(1)), 0.0);
  EXPECT_DOUBLE_EQ(average_depth(complete(2), ProductDistribution::uniform(2)), 2.0);
  // leaves at depths 1, 2, 3, 3 with masses 1/2, 1/4, 1/8, 1/8
  EXPECT_DOUBLE_EQ(average_depth(left_path(3), ProductDistribution::uniform(3)), 1.75);
}

TEST(AverageDepth, EqualsSumOfNonRootNodeMasses) {
  const ProductDistribution d({0.3, 0.6, 0.8});
  const auto t = node(0, node(1, leaf(1), leaf(-1)), node(2, leaf(-1), node(1, leaf(1), leaf(-1))));
  // Independent form: every non-root node contributes its reach probability.
  const std::vector<double> p{0.3, 0.6, 0.8};
  const double nodes = oracle::mass(p, {{0, 0}}) + oracle::mass(p, {{0, 1}}) + oracle::mass(p, {{0, 0}, {1, 0}}) +
                       oracle::mass(p, {{0, 0}, {1, 1}}) + oracle::mass(p, {{0, 1}, {2, 0}}) +
                       oracle::mass(p, {{0, 1}, {2, 1}}) + oracle::mass(p, {{0, 1}, {2, 1}, {1, 0}}) +
                       oracle::mass(p, {{0, 1}, {2, 1}, {1, 1}});
  EXPECT_NEAR(average_depth(t, d), nodes, 1e-14);
}

TEST(MaxDepth, Examples) {
  EXPECT_EQ(max_depth(leaf(1)), 0u);
  EXPECT_EQ(max_depth(complete(2)), 2u);
  for (std::size_t n = 1; n <= 6; ++n) EXPECT_EQ(max_depth(left_path(n)), n);
}

TEST(TreeProperties, ReachProbabilitiesSumToOne) {
  SplitMix64 rng(17);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + uniform_below(rng, 6);
    const auto t = generate_random_tree(n, n, rng);
    const auto d = random_biases(n, rng);
    double total = 0.0;
    t.for_each_leaf([&](auto, const auto&, const Restriction& path, std::size_t) {
      total += reach_probability(d, path);
    });
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(TreeProperties, RoutingNeverRepeatsCoordinate) {
  SplitMix64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + uniform_below(rng, 6);
    const auto t = generate_random_tree(n, n, rng);
    // for_each_leaf builds paths with Restriction::with, which throws on a repeat.
    EXPECT_NO_THROW(t.for_each_leaf([](auto, const auto&, const Restriction&, std::size_t) {}));
    const auto x = ProductDistribution::uniform(n).draw(rng);
    EXPECT_EQ(t(x), t(x));
  }
}

TEST(TreeProperties, PathAverageDepthAtMostTwo) {
  for (std::size_t n = 1; n <= 16; ++n) EXPECT_LE(average_depth(left_path(n), ProductDistribution::uniform(n)), 2.0);
}

TEST(TreeProperties, CompleteTreeDepthsAreLogSize) {
  for (std::size_t d = 0; d <= 5; ++d) {
    const auto t = complete(d);
    const auto s = static_cast<double>(t.size());
    EXPECT_EQ(static_cast<double>(max_depth(t)), std::log2(s));
    EXPECT_EQ(average_depth(t, ProductDistribution::uniform(std::max<std::size_t>(d, 1))), std::log2(s));
  }
}

TEST(Tree, MakeInternalRejectsRepeatedVariable) {
  EXPECT_THROW((void)node(0, node(0, leaf(1), leaf(-1)), leaf(1)), MalformedTree);
}

TEST(BareTree, IdsAreMonotoneAndSurvivorsKeepTheirs) {
  BareTree b;
  EXPECT_EQ(b.size(), 1u);
  b = b.split(LeafId{0}, 2);
  EXPECT_EQ(b.leaf_ids(), (std::vector<LeafId>{{1}, {2}}));
  b = b.split(LeafId{1}, 0);
  EXPECT_EQ(b.leaf_ids(), (std::vector<LeafId>{{2}, {3}, {4}}));
  EXPECT_EQ(b.size(), b.shape().internal_count() + 1);
  EXPECT_THROW((void)b.split(LeafId{1}, 1), UnknownLeaf);
  EXPECT_THROW((void)b.split(LeafId{3}, 2), MalformedTree);
}

TEST(TreeIo, ParsesLeafAndDictator) {
  EXPECT_EQ(parse_decision_tree(R"({"leaf": 1})"), leaf(1));
  const auto d = parse_decision_tree(R"({"var":0,"lo":{"leaf":-1},"hi":{"leaf":1}})");
  EXPECT_EQ(d, node(0, leaf(-1), leaf(1)));
  EXPECT_EQ(d(BitVector{1}), Label::positive);
}

TEST(TreeIo, RoundTripsDepthThreeDocument) {
  const std::string doc =
      R"({"var":2,"lo":{"var":0,"lo":{"leaf":1},"hi":{"var":1,"lo":{"leaf":-1},"hi":{"leaf":1}}},"hi":{"leaf":-1}})";
  EXPECT_EQ(serialize_tree(parse_decision_tree(doc)), doc);
  // Whitespace does not matter on input.
  const std::string spaced = "{ \"var\" : 0 ,\n \"lo\" : {\"leaf\": 1}, \"hi\": {\"leaf\": -1} }";
  EXPECT_EQ(serialize_tree(parse_decision_tree(spaced)), R"({"var":0,"lo":{"leaf":1},"hi":{"leaf":-1}})");
}

TEST(TreeIo, RoundTripsGeneratedTrees) {
  SplitMix64 rng(99);
  for (int k = 0; k < 50; ++k) {
    const auto t = generate_random_tree(6, 5, rng);
    EXPECT_EQ(parse_decision_tree(serialize_tree(t)), t);
  }
  const BareTree b = BareTree().split(LeafId{0}, 1).split(LeafId{2}, 0);
  EXPECT_EQ(parse_bare_tree(serialize_tree(b)), b);
  EXPECT_EQ(parse_bare_tree(serialize_tree(b)).next_id(), b.next_id());
}

TEST(TreeIo, Errors) {
  EXPECT_THROW((void)parse_tree("{"), FormatError);
  EXPECT_THROW((void)parse_tree(R"({"leaf": 2})"), FormatError);
  EXPECT_THROW((void)parse_tree(R"({"var":0,"lo":{"leaf":1}})"), FormatError);
  EXPECT_THROW((void)parse_tree(R"({"var":0,"lo":{"var":0,"lo":{"leaf":1},"hi":{"leaf":-1}},"hi":{"leaf":1}})"),
               MalformedTree);
  EXPECT_THROW((void)parse_tree(R"({"var":-1,"lo":{"leaf":1},"hi":{"leaf":-1}})"), MalformedTree);
  EXPECT_THROW((void)parse_tree(R"({"var":0,"lo":{"leaf":null,"id":0},"hi":{"leaf":1}})"), FormatError);
  EXPECT_THROW((void)parse_tree(R"({"var":0,"lo":{"leaf":null,"id":1},"hi":{"leaf":null,"id":1}})"),
               MalformedTree);
}

TEST(TreeIo, DistributionRoundTrip) {
  const ProductDistribution d({0.25, 0.5, 0.125});
  EXPECT_EQ(serialize_distribution(d), R"({"biases":[0.25,0.5,0.125]})");
  EXPECT_EQ(parse_distribution(serialize_distribution(d)), d);
  EXPECT_THROW((void)parse_distribution(R"({"biases":[0.0]})"), InvalidArgument);
  EXPECT_THROW((void)parse_distribution(R"({"p":[0.5]})"), FormatError);
}

TEST(RestrictTree, ComputesRestrictedFunction) {
  SplitMix64 rng(8);
  for (int k = 0; k < 30; ++k) {
    const auto t = generate_random_tree(5, 4, rng);
    const auto r = Restriction{}.with(1, true).with(3, false);
    const auto sub = restrict_tree(t, r);
    EXPECT_FALSE(sub.uses_variable(1));
    EXPECT_FALSE(sub.uses_variable(3));
    for (unsigned x = 0; x < 32; ++x) {
      const BitVector v(5, x);
      if (r.admits(v)) {
        EXPECT_EQ(sub(v), t(v));
      }
    }
  }
}

TEST(TargetOracle, LabelsAndDimension) {
  const auto o = TargetOracle::from_tree(node(1, leaf(-1), leaf(1)), ProductDistribution::uniform(2));
  EXPECT_EQ(o.label(BitVector{0, 1}), Label::positive);
  EXPECT_THROW((void)o.label(BitVector{0, 1, 1}), DimensionMismatch);
  EXPECT_THROW((void)TargetOracle::from_tree(node(3, leaf(-1), leaf(1)), ProductDistribution::uniform(2)),
               DimensionMismatch);
}
