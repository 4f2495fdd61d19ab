#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "varls/rng.hpp"

namespace varls {

/// Gauss-Hermite rule normalised for expectations under N(0, 1). Nodes are
/// stored as the positive half plus an optional centre node so that callers
/// can evaluate mirrored pairs together; this makes odd integrands integrate
/// to exactly zero.
struct GaussHermiteRule {
  std::vector<double> nodes;    // positive nodes, decreasing
  std::vector<double> weights;  // weight of each +/- pair member
  double centre_weight = 0.0;   // non-zero only for odd node counts
  int size() const { return static_cast<int>(2 * nodes.size()) + (centre_weight > 0.0 ? 1 : 0); }
};

/// Cached rule for `n` nodes, n in [2, 256].
const GaussHermiteRule& gauss_hermite_rule(int n);

struct GaussHermite {
  int nodes = 64;
};

struct MonteCarlo {
  int samples = 1000;
  Stream stream{0, "mc"};
};

using ExpectationMethod = std::variant<GaussHermite, MonteCarlo>;

void validate(const ExpectationMethod& method);

/// Same method with the Monte Carlo stream replaced by its `index`-th child.
/// Gauss-Hermite methods are returned unchanged. Per-example expectations
/// inside optimizers and noise probes use this so that a second code path can
/// reproduce the exact sample set for example `index`.
ExpectationMethod for_example(const ExpectationMethod& method, std::uint64_t index);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for quadrature
};

/// E[g(X)] for X ~ N(mean, variance). variance == 0 evaluates g(mean).
Estimate gaussian_expectation(const std::function<double(double)>& g, double mean,
                              double variance, const ExpectationMethod& method);

}  // namespace varls
