#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "varls/rng.hpp"

using varls::Stream;

TEST_CASE("copies replay the same sequence") {
  Stream a(7, "train", 3);
  for (int i = 0; i < 5; ++i) a.next_u64();
  Stream b = a;
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("seed, tag and index all change the stream") {
  const auto first = [](Stream s) { return s.next_u64(); };
  std::set<std::uint64_t> seen = {first(Stream(1, "a", 0)), first(Stream(2, "a", 0)), first(Stream(1, "b", 0)),
                                  first(Stream(1, "a", 1))};
  CHECK(seen.size() == 4);
}

TEST_CASE("children do not advance the parent and are distinct") {
  Stream p(11, "x");
  const auto key = p.key();
  const auto pos = p.position();
  Stream c0 = p.child(0);
  Stream c1 = p.child(1);
  CHECK(p.key() == key);
  CHECK(p.position() == pos);
  CHECK(c0.key() != c1.key());
  CHECK(c0.key() != p.key());
  CHECK(p.child(0).next_u64() == c0.next_u64());
  CHECK(p.child("noise", 2).key() != p.child("batch", 2).key());
}

TEST_CASE("uniform draws lie in [0, 1) with the right mean") {
  Stream s(3, "u");
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal draws have unit variance") {
  Stream s(5, "n");
  const int n = 200000;
  double m = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("below is unbiased over a small range") {
  Stream s(9, "below");
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = s.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  CHECK(chi2 < 22.46);  // chi-square(6) 0.999 quantile
}
