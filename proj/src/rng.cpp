#include "lvm/rng.hpp"

#include <cmath>
#include <numbers>

namespace lvm {

std::uint64_t Rng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng Rng::substream(std::string_view label) const {
  // FNV-1a over the label, then folded into the key.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return Rng(mix(key_ ^ mix(h)), true);
}

Rng Rng::substream(std::uint64_t index) const {
  return Rng(mix(key_ ^ mix(index + 0x632BE59BD9B4E019ULL)), true);
}

double Rng::normal() {
  // Box-Muller; the second variate is discarded so every draw consumes a
  // fixed number of counter steps.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec Rng::normal_vector(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Eigen::Index Rng::categorical(const Vec& probs) {
  const double total = probs.sum();
  const double u = uniform() * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  // Round-off: return the last index with positive mass.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i)
    if (probs(i) > 0) return i;
  return probs.size() - 1;
}

}  // namespace lvm
