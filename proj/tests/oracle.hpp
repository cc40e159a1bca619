#pragma once

// Reference implementations used only by the tests. They enumerate whole
// cubes with plain integer loops and never call the library's enumeration
// helpers, so they act as independent oracles.

#include <cmath>
#include <functional>
#include <vector>

#include "tdt/core.hpp"

namespace oracle {

using Fn = std::function<int(unsigned)>;  // f over the integer encoding of x, values +/-1

inline double weight(unsigned x, const std::vector<double>& p) {
  double w = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) w *= ((x >> i) & 1U) ? p[i] : 1.0 - p[i];
  return w;
}

inline Fn from_tree(const tdt::DecisionTree& t, std::size_t n) {
  return [t, n](unsigned x) { return tdt::to_int(t(tdt::BitVector(n, x))); };
}

/// Whether x satisfies the restriction (listed as (coordinate, bit) pairs).
inline bool admits(unsigned x, const std::vector<std::pair<std::size_t, int>>& r) {
  for (auto [i, b] : r)
    if (static_cast<int>((x >> i) & 1U) != b) return false;
  return true;
}

inline double mass(const std::vector<double>& p, const std::vector<std::pair<std::size_t, int>>& r) {
  double m = 0.0;
  for (unsigned x = 0; x < (1U << p.size()); ++x)
    if (admits(x, r)) m += weight(x, p);
  return m;
}

/// Pr[f(x) != f(x^(i))] conditional on r, with x^(i)_i drawn afresh from mu_i.
/// Enumerates (x, x'_i) jointly, exactly as the definition reads.
inline double rerandomized_influence(const Fn& f, const std::vector<double>& p, std::size_t i,
                                     const std::vector<std::pair<std::size_t, int>>& r = {}) {
  for (auto [c, b] : r)
    if (c == i) return 0.0;
  double num = 0.0;
  for (unsigned x = 0; x < (1U << p.size()); ++x) {
    if (!admits(x, r)) continue;
    for (int b = 0; b < 2; ++b) {
      const unsigned y = b ? (x | (1U << i)) : (x & ~(1U << i));
      const double wb = b ? p[i] : 1.0 - p[i];
      if (f(x) != f(y)) num += weight(x, p) * wb;
    }
  }
  return num / mass(p, r);
}

/// Pr[f = +1] conditional on r.
inline double positive(const Fn& f, const std::vector<double>& p,
                       const std::vector<std::pair<std::size_t, int>>& r = {}) {
  double num = 0.0;
  for (unsigned x = 0; x < (1U << p.size()); ++x)
    if (admits(x, r) && f(x) == 1) num += weight(x, p);
  return num / mass(p, r);
}

/// Pr[g(x) != f(x)] over the whole cube.
inline double disagreement(const Fn& f, const Fn& g, const std::vector<double>& p) {
  double e = 0.0;
  for (unsigned x = 0; x < (1U << p.size()); ++x)
    if (f(x) != g(x)) e += weight(x, p);
  return e;
}

}  // namespace oracle
