#pragma once

// Exact evaluation of influence, variance, error, score and cost by
// enumerating the free coordinates of a subfunction, weighted by mu.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "tdt/core.hpp"

namespace tdt {

/// Larger free-coordinate counts are refused by every exact operation.
inline constexpr std::size_t kDefaultEnumerationCap = 24;

/// Scores and influences closer than this are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

/// How Inf_i is scaled relative to the sensitivity Pr_{x}[f(x, i<-0) != f(x, i<-1)].
///
///   rerandomized: Pr[f(x) != f(x^(i))] with x_i redrawn from mu_i, factor 2 p_i (1 - p_i)
///   flip:         Pr[f(x) != f(x with bit i flipped)], factor 1
///   variance:     E[Var_{x_i} f], the Efron-Stein normalization, factor 4 p_i (1 - p_i)
///
/// All three agree on the uniform distribution up to the constant 2 between
/// the first and the others.
enum class InfluenceNormalization { rerandomized, flip, variance };

inline const char* to_string(InfluenceNormalization n) {
  switch (n) {
    case InfluenceNormalization::rerandomized: return "rerandomized";
    case InfluenceNormalization::flip: return "flip";
    case InfluenceNormalization::variance: return "variance";
  }
  return "?";
}

inline double influence_factor(InfluenceNormalization n, double p) {
  switch (n) {
    case InfluenceNormalization::rerandomized: return 2.0 * p * (1.0 - p);
    case InfluenceNormalization::flip: return 1.0;
    case InfluenceNormalization::variance: return 4.0 * p * (1.0 - p);
  }
  return 0.0;
}

struct ExactOptions {
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  InfluenceNormalization normalization = InfluenceNormalization::rerandomized;
};

/// f restricted to the region where `restriction` holds.
template <BooleanFunction F>
class SubfunctionView {
 public:
  SubfunctionView(const F& f, std::size_t dimension, Restriction restriction = {})
      : f_(&f), n_(dimension), restriction_(restriction) {
    if (n_ == 0 || n_ > kMaxDimension) throw DimensionMismatch("dimension out of range");
    if (n_ < kMaxDimension && (restriction_.mask() >> n_) != 0)
      throw DimensionMismatch("restriction fixes a coordinate beyond the dimension");
  }

  const F& function() const noexcept { return *f_; }
  std::size_t dimension() const noexcept { return n_; }
  const Restriction& restriction() const noexcept { return restriction_; }
  std::vector<std::size_t> free_coordinates() const { return restriction_.free_coordinates(n_); }
  Label operator()(const BitVector& x) const { return (*f_)(x); }

 private:
  const F* f_;
  std::size_t n_;
  Restriction restriction_;
};

namespace detail {

template <class F>
void check_view(const SubfunctionView<F>& view, const ProductDistribution& dist, std::size_t cap) {
  if (view.dimension() != dist.dimension())
    throw DimensionMismatch("view has dimension " + std::to_string(view.dimension()) +
                            ", distribution has " + std::to_string(dist.dimension()));
  const std::size_t free = view.dimension() - view.restriction().size();
  if (free > cap) throw EnumerationBudgetExceeded(free, cap);
}

/// Calls fn(x, w) for every completion x of the restriction, where the
/// coordinates in `free` range over {0,1} and w is their product weight
/// under mu. Coordinates neither fixed nor listed keep the bits of `base`.
template <class Fn>
void enumerate(std::size_t n, std::uint64_t base, const std::vector<std::size_t>& free,
               const ProductDistribution& dist, Fn&& fn) {
  const std::size_t k = free.size();
  std::vector<double> p(k);
  for (std::size_t t = 0; t < k; ++t) p[t] = dist.bias(free[t]);
  const std::uint64_t count = std::uint64_t{1} << k;
  for (std::uint64_t a = 0; a < count; ++a) {
    std::uint64_t bits = base;
    double w = 1.0;
    for (std::size_t t = 0; t < k; ++t) {
      if ((a >> t) & 1U) {
        bits |= std::uint64_t{1} << free[t];
        w *= p[t];
      } else {
        w *= 1.0 - p[t];
      }
    }
    fn(BitVector(n, bits), w);
  }
}

}  // namespace detail

/// Pr_{x_free}[f_v(x, i<-0) != f_v(x, i<-1)], conditional on the restriction.
template <class F>
double sensitivity(const SubfunctionView<F>& view, const ProductDistribution& dist, std::size_t i,
                   std::size_t cap = kDefaultEnumerationCap) {
  detail::check_view(view, dist, cap);
  if (i >= view.dimension()) throw DimensionMismatch("coordinate " + std::to_string(i) + " out of range");
  if (view.restriction().fixes(i)) return 0.0;
  std::vector<std::size_t> others;
  for (std::size_t c : view.free_coordinates())
    if (c != i) others.push_back(c);
  double s = 0.0;
  const std::uint64_t hi = std::uint64_t{1} << i;
  detail::enumerate(view.dimension(), view.restriction().values(), others, dist,
                    [&](const BitVector& x, double w) {
                      const BitVector x1(view.dimension(), x.word() | hi);
                      if (Label(view(x)) != Label(view(x1))) s += w;
                    });
  return s;
}

/// Inf_i(f_v). Coordinates fixed by the restriction have influence exactly 0.
template <class F>
double influence(const SubfunctionView<F>& view, const ProductDistribution& dist, std::size_t i,
                 const ExactOptions& opts = {}) {
  const double s = sensitivity(view, dist, i, opts.enumeration_cap);
  if (view.restriction().fixes(i)) return 0.0;
  return influence_factor(opts.normalization, dist.bias(i)) * s;
}

/// Inf_i(f_v) for every coordinate 0..n-1.
template <class F>
std::vector<double> influences(const SubfunctionView<F>& view, const ProductDistribution& dist,
                               const ExactOptions& opts = {}) {
  std::vector<double> out(view.dimension(), 0.0);
  for (std::size_t i = 0; i < view.dimension(); ++i) out[i] = influence(view, dist, i, opts);
  return out;
}

template <class F>
double total_influence(const SubfunctionView<F>& view, const ProductDistribution& dist,
                       const ExactOptions& opts = {}) {
  double sum = 0.0;
  for (double v : influences(view, dist, opts)) sum += v;
  return sum;
}

/// Pr[f_v = +1] conditional on the restriction.
template <class F>
double positive_mass(const SubfunctionView<F>& view, const ProductDistribution& dist,
                     std::size_t cap = kDefaultEnumerationCap) {
  detail::check_view(view, dist, cap);
  double m = 0.0;
  detail::enumerate(view.dimension(), view.restriction().values(), view.free_coordinates(), dist,
                    [&](const BitVector& x, double w) {
                      if (Label(view(x)) == Label::positive) m += w;
                    });
  return m;
}

/// Var(f_v) = 4 mu+ (1 - mu+) for a +/-1 valued function.
template <class F>
double variance(const SubfunctionView<F>& view, const ProductDistribution& dist,
                std::size_t cap = kDefaultEnumerationCap) {
  const double m = positive_mass(view, dist, cap);
  return 4.0 * m * (1.0 - m);
}

/// Minority mass min(Pr[f_v = -1], Pr[f_v = +1]).
template <class F>
double leaf_error(const SubfunctionView<F>& view, const ProductDistribution& dist,
                  std::size_t cap = kDefaultEnumerationCap) {
  const double m = positive_mass(view, dist, cap);
  return std::min(m, 1.0 - m);
}

/// Majority label of f_v; exact ties resolve to +1.
template <class F>
Label majority(const SubfunctionView<F>& view, const ProductDistribution& dist,
               std::size_t cap = kDefaultEnumerationCap) {
  return positive_mass(view, dist, cap) >= 0.5 - kTieTolerance ? Label::positive : Label::negative;
}

struct ScoreResult {
  double score = 0.0;
  /// Most influential free coordinate; empty when the leaf has no free coordinate.
  std::optional<std::size_t> coordinate;
  double reach = 0.0;
  double max_influence = 0.0;
  /// Inf(f_v); carried along because cost needs it for the same enumeration.
  double total_influence = 0.0;
};

/// p_v * max_i Inf_i(f_v) with the maximizing coordinate. Ties go to the
/// lowest coordinate index; an all-zero leaf reports its lowest free coordinate.
template <BooleanFunction F>
ScoreResult score_at(const Restriction& path, const F& f, const ProductDistribution& dist,
                     const ExactOptions& opts = {}) {
  const SubfunctionView<F> view(f, dist.dimension(), path);
  const auto inf = influences(view, dist, opts);
  ScoreResult r;
  r.reach = reach_probability(dist, path);
  for (std::size_t i = 0; i < inf.size(); ++i) {
    r.total_influence += inf[i];
    if (path.fixes(i)) continue;
    if (!r.coordinate || inf[i] > r.max_influence + kTieTolerance) {
      r.coordinate = i;
      r.max_influence = inf[i];
    }
  }
  r.score = r.reach * r.max_influence;
  return r;
}

template <BooleanFunction F>
ScoreResult score(const BareTree& bare, LeafId leaf, const F& f, const ProductDistribution& dist,
                  const ExactOptions& opts = {}) {
  validate_dimension(bare.shape(), dist.dimension());
  return score_at(bare.path_of(leaf), f, dist, opts);
}

/// Sum over leaves of p_v * Inf(f_v).
template <BooleanFunction F>
double cost(const BareTree& bare, const F& f, const ProductDistribution& dist, const ExactOptions& opts = {}) {
  validate_dimension(bare.shape(), dist.dimension());
  double c = 0.0;
  bare.shape().for_each_leaf([&](auto, const auto&, const Restriction& path, std::size_t) {
    const SubfunctionView<F> view(f, dist.dimension(), path);
    c += reach_probability(dist, path) * total_influence(view, dist, opts);
  });
  return c;
}

/// Labels each leaf with the conditional majority of f (ties +1), the
/// error-minimizing labeling of this bare tree.
template <BooleanFunction F>
DecisionTree f_completion(const BareTree& bare, const F& f, const ProductDistribution& dist,
                          std::size_t cap = kDefaultEnumerationCap) {
  validate_dimension(bare.shape(), dist.dimension());
  std::vector<std::pair<LeafId, Label>> labels;
  bare.shape().for_each_leaf([&](auto, const auto& node, const Restriction& path, std::size_t) {
    const SubfunctionView<F> view(f, dist.dimension(), path);
    labels.emplace_back(node.leaf, majority(view, dist, cap));
  });
  return bare.label_with([&](LeafId id) {
    for (const auto& [k, y] : labels)
      if (k == id) return y;
    throw UnknownLeaf("leaf vanished during labeling");
  });
}

/// Sum over leaves of p_v * error(f_v, +/-1): the error of the f-completion.
template <BooleanFunction F>
double completion_error(const BareTree& bare, const F& f, const ProductDistribution& dist,
                        std::size_t cap = kDefaultEnumerationCap) {
  validate_dimension(bare.shape(), dist.dimension());
  double e = 0.0;
  bare.shape().for_each_leaf([&](auto, const auto&, const Restriction& path, std::size_t) {
    const SubfunctionView<F> view(f, dist.dimension(), path);
    e += reach_probability(dist, path) * leaf_error(view, dist, cap);
  });
  return e;
}

/// Pr_{x~mu}[T(x) != f(x)] by full enumeration.
template <BooleanFunction F>
double tree_error(const DecisionTree& tree, const F& f, const ProductDistribution& dist,
                  std::size_t cap = kDefaultEnumerationCap) {
  validate_dimension(tree, dist.dimension());
  const std::size_t n = dist.dimension();
  if (n > cap) throw EnumerationBudgetExceeded(n, cap);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  double e = 0.0;
  detail::enumerate(n, 0, all, dist, [&](const BitVector& x, double w) {
    if (tree(x) != Label(f(x))) e += w;
  });
  return e;
}

}  // namespace tdt
