#include "varls/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include "varls/error.hpp"

namespace varls {

namespace {

// Newton iteration on orthonormal Hermite polynomials, seeded with the usual
// asymptotic guesses for the largest roots.
GaussHermiteRule build_rule(int n) {
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  const int half = (n + 1) / 2;
  std::vector<double> x(half), w(half);
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    w[i] = 2.0 / (pp * pp);
  }

  GaussHermiteRule rule;
  const bool odd = n % 2 == 1;
  const int pairs = n / 2;
  // physicists' -> probabilists': node sqrt(2) x, weight w / sqrt(pi)
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (int i = 0; i < pairs; ++i) {
    rule.nodes.push_back(std::numbers::sqrt2 * x[i]);
    rule.weights.push_back(w[i] * inv_sqrt_pi);
  }
  if (odd) rule.centre_weight = w[half - 1] * inv_sqrt_pi;
  double total = rule.centre_weight;
  for (double wi : rule.weights) total += 2.0 * wi;
  for (double& wi : rule.weights) wi /= total;
  rule.centre_weight /= total;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int n) {
  if (n < 2 || n > 256) {
    throw InvalidInput("Gauss-Hermite node count must be in [2, 256], got " + std::to_string(n));
  }
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(n));
  return *slot;
}

void validate(const ExpectationMethod& method) {
  if (const auto* gh = std::get_if<GaussHermite>(&method)) {
    if (gh->nodes < 2 || gh->nodes > 256) {
      throw InvalidInput("Gauss-Hermite node count must be in [2, 256]");
    }
  } else if (std::get<MonteCarlo>(method).samples < 1) {
    throw InvalidInput("Monte Carlo sample count must be >= 1");
  }
}

ExpectationMethod for_example(const ExpectationMethod& method, std::uint64_t index) {
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    return MonteCarlo{mc->samples, mc->stream.child(index)};
  }
  return method;
}

Estimate gaussian_expectation(const std::function<double(double)>& g, double mean,
                              double variance, const ExpectationMethod& method) {
  validate(method);
  if (!(variance >= 0.0)) throw InvalidInput("variance must be non-negative");
  if (variance == 0.0) return {g(mean), 0.0};
  const double sd = std::sqrt(variance);
  if (const auto* gh = std::get_if<GaussHermite>(&method)) {
    const auto& rule = gauss_hermite_rule(gh->nodes);
    double acc = rule.centre_weight > 0.0 ? rule.centre_weight * g(mean) : 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double dz = sd * rule.nodes[k];
      acc += rule.weights[k] * (g(mean + dz) + g(mean - dz));
    }
    return {acc, 0.0};
  }
  const auto& mc = std::get<MonteCarlo>(method);
  Stream stream = mc.stream;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < mc.samples; ++s) {
    const double v = g(mean + sd * stream.normal());
    sum += v;
    sum_sq += v * v;
  }
  const double n = mc.samples;
  const double m = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * m * m) / (n - 1)) : 0.0;
  return {m, std::sqrt(var / n)};
}

}  // namespace varls
