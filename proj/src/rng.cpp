#include "varls/rng.hpp"

#include <cmath>
#include <numbers>

namespace varls {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Stream::Stream(std::uint64_t seed, std::string_view tag, std::uint64_t index)
    : key_(mix64(mix64(mix64(seed + kGolden) ^ hash_tag(tag)) + index * kGolden)) {}

Stream Stream::child(std::uint64_t index) const {
  return Stream(mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

Stream Stream::child(std::string_view tag, std::uint64_t index) const {
  return Stream(mix64(mix64(key_ ^ hash_tag(tag)) + index * kGolden));
}

std::uint64_t Stream::next_u64() {
  ++counter_;
  return mix64(key_ ^ mix64(counter_ * kGolden));
}

double Stream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Stream::below(std::uint64_t n) {
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace varls
