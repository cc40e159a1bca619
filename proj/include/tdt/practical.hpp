#pragma once

// Parameter-free, sample-driven top-down induction. Scores are estimated
// from re-randomized sample pairs, leaves are labeled by majority vote on a
// labeling sample, and termination is decided on an independent
// error-estimation sample. All three sample sets grow with the step count
// according to the schedules below.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tdt/core.hpp"
#include "tdt/rng.hpp"

namespace tdt {

/// Pairs are packed into one word, which leaves room for 61 coordinates.
inline constexpr std::size_t kMaxSampledDimension = 61;

namespace detail {
inline void check_schedule_args(std::uint64_t j, double epsilon, double delta) {
  if (j < 1) throw InvalidArgument("step index must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
}
}  // namespace detail

/// Score-estimation pairs per coordinate needed at step j:
/// ceil(12 (j+1) n / eps * ln(4 j^2 (j+1) n / delta)).
inline std::uint64_t score_pair_schedule(std::uint64_t j, double delta, double epsilon, std::size_t n) {
  detail::check_schedule_args(j, epsilon, delta);
  if (n < 1) throw InvalidArgument("dimension must be at least 1");
  const double jj = static_cast<double>(j);
  const double nn = static_cast<double>(n);
  return static_cast<std::uint64_t>(
      std::ceil(12.0 * (jj + 1.0) * nn / epsilon * std::log(4.0 * jj * jj * (jj + 1.0) * nn / delta)));
}

/// Labeling samples needed at step j, sized for a tree of j+1 leaves:
/// ceil(128 ((j+1) ln 2 + ln(16 j^2 / delta)) / eps^2).
inline std::uint64_t labeling_schedule(std::uint64_t j, double epsilon, double delta) {
  detail::check_schedule_args(j, epsilon, delta);
  const double jj = static_cast<double>(j);
  return static_cast<std::uint64_t>(
      std::ceil(128.0 * ((jj + 1.0) * std::log(2.0) + std::log(16.0 * jj * jj / delta)) / (epsilon * epsilon)));
}

/// Error-estimation samples needed at step j: ceil(32 / eps^2 * ln(16 j^2 / delta)).
inline std::uint64_t error_estimation_schedule(std::uint64_t j, double epsilon, double delta) {
  detail::check_schedule_args(j, epsilon, delta);
  const double jj = static_cast<double>(j);
  return static_cast<std::uint64_t>(std::ceil(32.0 / (epsilon * epsilon) * std::log(16.0 * jj * jj / delta)));
}

/// (x, f(x)) packed as the bits of x plus the label in the top bit.
class LabeledSample {
 public:
  LabeledSample() = default;
  LabeledSample(const BitVector& x, Label y)
      : word_(x.word() | (y == Label::positive ? kLabelBit : 0)) {}

  std::uint64_t bits() const noexcept { return word_ & ~kLabelBit; }
  BitVector point(std::size_t n) const { return BitVector(n, bits()); }
  bool bit(std::size_t i) const noexcept { return (word_ >> i) & 1U; }
  Label label() const noexcept { return (word_ & kLabelBit) ? Label::positive : Label::negative; }

 private:
  static constexpr std::uint64_t kLabelBit = std::uint64_t{1} << 63;
  std::uint64_t word_ = 0;
};

/// ((x, f(x)), (x^(i), f(x^(i)))) where x^(i) equals x except that
/// coordinate i was redrawn from mu_i. The coordinate i is implied by the
/// container the pair lives in.
class LabeledPair {
 public:
  LabeledPair() = default;
  LabeledPair(const BitVector& x, bool redrawn, Label fx, Label fxi)
      : word_(x.word() | (redrawn ? kRedrawnBit : 0) | (fx == Label::positive ? kFirstBit : 0) |
              (fxi == Label::positive ? kSecondBit : 0)) {}

  std::uint64_t bits() const noexcept { return word_ & kPointMask; }
  BitVector first(std::size_t n) const { return BitVector(n, bits()); }
  BitVector second(std::size_t n, std::size_t i) const { return first(n).with(i, redrawn_bit()); }
  bool bit(std::size_t i) const noexcept { return (word_ >> i) & 1U; }
  bool redrawn_bit() const noexcept { return word_ & kRedrawnBit; }
  Label first_label() const noexcept { return (word_ & kFirstBit) ? Label::positive : Label::negative; }
  Label second_label() const noexcept { return (word_ & kSecondBit) ? Label::positive : Label::negative; }
  bool labels_differ() const noexcept { return ((word_ >> 62) ^ (word_ >> 63)) & 1U; }

 private:
  static constexpr std::uint64_t kRedrawnBit = std::uint64_t{1} << 61;
  static constexpr std::uint64_t kFirstBit = std::uint64_t{1} << 62;
  static constexpr std::uint64_t kSecondBit = std::uint64_t{1} << 63;
  static constexpr std::uint64_t kPointMask = kRedrawnBit - 1;
  std::uint64_t word_ = 0;
};

/// x ~ mu, then x^(i) by redrawing coordinate i from mu_i; both labeled by the oracle.
template <class Rng>
LabeledPair draw_pair(const TargetOracle& oracle, std::size_t i, Rng& rng) {
  if (i >= oracle.dimension()) throw DimensionMismatch("coordinate out of range");
  const BitVector x = oracle.draw(rng);
  const bool redrawn = oracle.distribution().draw_coordinate(i, rng);
  const BitVector xi = x.with(i, redrawn);
  return LabeledPair(x, redrawn, oracle.label(x), oracle.label(xi));
}

/// Fraction of pairs whose endpoints both reach `leaf` and whose labels differ.
inline double score_estimate(std::span<const LabeledPair> pairs, std::size_t i, LeafId leaf,
                             const BareTree& tree, std::size_t n) {
  if (pairs.empty()) throw InvalidArgument("score estimate needs a nonempty pair multiset");
  std::uint64_t hits = 0;
  for (const LabeledPair& p : pairs) {
    if (!p.labels_differ()) continue;
    if (tree.route(p.first(n)) == leaf && tree.route(p.second(n, i)) == leaf) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

/// Majority of the stored labels; ties and the empty set give +1.
inline Label majority_label(std::span<const LabeledSample> samples) {
  std::int64_t balance = 0;
  for (const LabeledSample& s : samples) balance += to_int(s.label());
  return balance >= 0 ? Label::positive : Label::negative;
}

struct ErrorCount {
  std::uint64_t misclassified = 0;
  std::uint64_t total = 0;
};

/// Routes each sample to its leaf and counts disagreements with that leaf's label.
template <class LabelOf>
ErrorCount empirical_error(const BareTree& tree, LabelOf&& label_of, std::span<const LabeledSample> samples,
                           std::size_t n) {
  ErrorCount c;
  for (const LabeledSample& s : samples) {
    ++c.total;
    if (s.label() != label_of(tree.route(s.point(n)))) ++c.misclassified;
  }
  return c;
}

struct PracticalOptions {
  double epsilon = 0.1;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_splits = 4096;
  /// Run the schedules and the termination test at epsilon / 2.
  bool halve_epsilon = false;
};

struct PracticalStep {
  /// Leaves before this split.
  std::size_t step = 0;
  LeafId leaf;
  std::size_t coordinate = 0;
  double estimated_score = 0.0;
  std::uint64_t misclassified = 0;
  std::uint64_t error_samples = 0;
};

/// One row per evaluated step.
struct SampleUsageRow {
  std::size_t step = 0;
  std::size_t leaves = 0;
  std::uint64_t score_pairs = 0;
  std::uint64_t labeling = 0;
  std::uint64_t error_estimation = 0;
  std::uint64_t label_queries = 0;
  std::uint64_t random_draws = 0;
};

struct PracticalBuildResult {
  DecisionTree tree;
  BareTree bare;
  std::vector<PracticalStep> trace;
  std::vector<SampleUsageRow> usage;
  bool terminated = false;
  std::uint64_t label_queries = 0;
  std::uint64_t random_draws = 0;
};

inline std::string usage_csv(const std::vector<SampleUsageRow>& rows) {
  std::string out = "step,leaves,M_S,M_LL,M_EE,label_queries,random_draws\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + std::to_string(r.leaves) + ',' + std::to_string(r.score_pairs) + ',' +
           std::to_string(r.labeling) + ',' + std::to_string(r.error_estimation) + ',' +
           std::to_string(r.label_queries) + ',' + std::to_string(r.random_draws) + '\n';
  }
  return out;
}

/// Keys of the derived random streams. Pair streams use pair_base + i.
enum class StreamPurpose : std::uint64_t { labeling = 0, error_estimation = 1, pair_base = 2 };

namespace detail {

/// Sample sets owned by one leaf. Every stored sample (and the first point
/// of every pair) routes to this leaf.
struct LeafSamples {
  bool alive = false;
  Restriction path;
  std::vector<LabeledSample> labeling;
  std::vector<LabeledSample> error;
  std::vector<std::vector<LabeledPair>> pairs;
  /// Per coordinate, pairs with both endpoints at this leaf and differing labels.
  std::vector<std::uint64_t> firing;
};

class PracticalBuilder {
 public:
  PracticalBuilder(const TargetOracle& oracle, const PracticalOptions& opts)
      : oracle_(oracle),
        n_(oracle.dimension()),
        epsilon_(opts.halve_epsilon ? opts.epsilon / 2.0 : opts.epsilon),
        delta_(opts.delta),
        seed_(opts.seed),
        max_splits_(opts.max_splits),
        pair_totals_(n_, 0) {
    if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
    if (!(delta_ > 0.0 && delta_ < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    if (n_ > kMaxSampledDimension)
      throw DimensionMismatch("sample-based builder supports at most " + std::to_string(kMaxSampledDimension) +
                              " coordinates");
  }

  PracticalBuildResult run() {
    PracticalBuildResult result;
    leaves_.resize(1);
    leaves_[0].alive = true;
    leaves_[0].pairs.resize(n_);
    leaves_[0].firing.assign(n_, 0);
    replenish(1, 0, 0, std::vector<std::uint64_t>(n_, 0));

    std::size_t j = 1;
    for (;;) {
      // Labels and the empirical error of the labeled tree.
      std::uint64_t mistakes = 0;
      std::uint64_t error_total = 0;
      for (auto& leaf : leaves_) {
        if (!leaf.alive) continue;
        const Label y = majority_label(leaf.labeling);
        for (const LabeledSample& s : leaf.error)
          if (s.label() != y) ++mistakes;
        error_total += leaf.error.size();
      }
      result.usage.push_back({j, bare_.size(), score_pair_schedule(j, delta_, epsilon_, n_),
                              labeling_schedule(j, epsilon_, delta_), error_estimation_schedule(j, epsilon_, delta_),
                              label_queries_, random_draws_});
      if (static_cast<double>(mistakes) <= 0.75 * epsilon_ * static_cast<double>(error_total)) {
        result.terminated = true;
        break;
      }
      if (result.trace.size() >= max_splits_) break;

      // Every coordinate has the same number of pairs, so comparing firing
      // counts compares the estimates exactly.
      std::int64_t best_leaf = -1;
      std::size_t best_coord = 0;
      std::uint64_t best_count = 0;
      for (std::size_t v = 0; v < leaves_.size(); ++v) {
        const auto& leaf = leaves_[v];
        if (!leaf.alive) continue;
        for (std::size_t i = 0; i < n_; ++i) {
          if (leaf.path.fixes(i)) continue;
          if (best_leaf < 0 || leaf.firing[i] > best_count) {
            best_leaf = static_cast<std::int64_t>(v);
            best_coord = i;
            best_count = leaf.firing[i];
          }
        }
      }
      if (best_leaf < 0) break;  // every leaf already queries all coordinates

      PracticalStep step;
      step.step = j;
      step.leaf = LeafId{static_cast<std::uint32_t>(best_leaf)};
      step.coordinate = best_coord;
      step.estimated_score = static_cast<double>(best_count) / static_cast<double>(pair_totals_[best_coord]);
      step.misclassified = mistakes;
      step.error_samples = error_total;
      result.trace.push_back(step);

      split(step.leaf, best_coord);
      ++j;
      replenish(j, labeling_schedule(j - 1, epsilon_, delta_), error_estimation_schedule(j - 1, epsilon_, delta_),
                std::vector<std::uint64_t>(n_, score_pair_schedule(j - 1, delta_, epsilon_, n_)));
    }

    result.bare = bare_;
    result.tree = bare_.label_with([&](LeafId id) { return majority_label(leaves_[id.value].labeling); });
    result.label_queries = label_queries_;
    result.random_draws = random_draws_;
    return result;
  }

 private:
  LeafSamples& owner(std::uint64_t bits) { return leaves_[bare_.route(BitVector(n_, bits)).value]; }

  SplitMix64 stream(StreamPurpose purpose, std::uint64_t offset, std::uint64_t step, std::uint64_t index) const {
    return SplitMix64(derive_seed(seed_, {static_cast<std::uint64_t>(purpose) + offset, step, index}));
  }

  /// Tops every category up to its step-j schedule with fresh draws routed
  /// from the root. `have_*` are the population totals before the call.
  void replenish(std::size_t j, std::uint64_t have_labeling, std::uint64_t have_error,
                 const std::vector<std::uint64_t>& have_pairs) {
    const std::uint64_t want_ll = labeling_schedule(j, epsilon_, delta_);
    for (std::uint64_t k = have_labeling; k < want_ll; ++k) {
      auto rng = stream(StreamPurpose::labeling, 0, j, k);
      const BitVector x = oracle_.draw(rng);
      owner(x.word()).labeling.emplace_back(x, oracle_.label(x));
      ++random_draws_;
      ++label_queries_;
    }
    const std::uint64_t want_ee = error_estimation_schedule(j, epsilon_, delta_);
    for (std::uint64_t k = have_error; k < want_ee; ++k) {
      auto rng = stream(StreamPurpose::error_estimation, 0, j, k);
      const BitVector x = oracle_.draw(rng);
      owner(x.word()).error.emplace_back(x, oracle_.label(x));
      ++random_draws_;
      ++label_queries_;
    }
    const std::uint64_t want_pairs = score_pair_schedule(j, delta_, epsilon_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::uint64_t k = have_pairs[i]; k < want_pairs; ++k) {
        auto rng = stream(StreamPurpose::pair_base, i, j, k);
        const LabeledPair p = draw_pair(oracle_, i, rng);
        LeafSamples& leaf = owner(p.bits());
        if (fires(p, i, leaf.path)) ++leaf.firing[i];
        leaf.pairs[i].push_back(p);
        random_draws_ += 2;
        label_queries_ += 2;
      }
      pair_totals_[i] = want_pairs;
    }
  }

  /// x^(i) differs from x only at i, so when i is free on the path both
  /// endpoints reach the same leaf; when i is fixed they reach it together
  /// only if the redrawn bit is unchanged, in which case the labels agree.
  static bool fires(const LabeledPair& p, std::size_t i, const Restriction& path) {
    return p.labels_differ() && !path.fixes(i);
  }

  void split(LeafId id, std::size_t var) {
    const LeafId lo_id = bare_.next_id();
    bare_ = bare_.split(id, var);
    leaves_.resize(lo_id.value + 2);
    LeafSamples parent = std::move(leaves_[id.value]);
    leaves_[id.value] = LeafSamples{};
    for (int b = 0; b < 2; ++b) {
      LeafSamples& child = leaves_[lo_id.value + static_cast<std::uint32_t>(b)];
      child.alive = true;
      child.path = parent.path.with(var, b == 1);
      child.pairs.resize(n_);
      child.firing.assign(n_, 0);
    }
    auto side = [&](std::uint64_t bits) -> LeafSamples& {
      return leaves_[lo_id.value + static_cast<std::uint32_t>((bits >> var) & 1U)];
    };
    for (const auto& s : parent.labeling) side(s.bits()).labeling.push_back(s);
    for (const auto& s : parent.error) side(s.bits()).error.push_back(s);
    for (std::size_t i = 0; i < n_; ++i) {
      for (const auto& p : parent.pairs[i]) {
        LeafSamples& child = side(p.bits());
        if (fires(p, i, child.path)) ++child.firing[i];
        child.pairs[i].push_back(p);
      }
    }
  }

  const TargetOracle& oracle_;
  std::size_t n_;
  double epsilon_;
  double delta_;
  std::uint64_t seed_;
  std::size_t max_splits_;
  BareTree bare_;
  /// Indexed by leaf id; ids of split leaves stay allocated but dead.
  std::vector<LeafSamples> leaves_;
  std::vector<std::uint64_t> pair_totals_;
  std::uint64_t label_queries_ = 0;
  std::uint64_t random_draws_ = 0;
};

}  // namespace detail

/// Sample-driven builder; bit-reproducible for a given seed.
inline PracticalBuildResult build_topdown_practical(const TargetOracle& oracle, const PracticalOptions& opts) {
  return detail::PracticalBuilder(oracle, opts).run();
}

}  // namespace tdt
