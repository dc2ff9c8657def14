#include "filterstab/rng.h"

namespace filterstab {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t StreamSeed(std::uint64_t master_seed, std::uint64_t trial) {
  return SplitMix64(master_seed ^ trial);
}

double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int SampleCategorical(std::span<const double> probs, Rng& rng) {
  const double u = UniformUnit(rng);
  double cumulative = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probs[i];
    if (u < cumulative) return last_positive;
  }
  // Rounding can leave the cumulative sum a hair below one.
  return last_positive;
}

}  // namespace filterstab
