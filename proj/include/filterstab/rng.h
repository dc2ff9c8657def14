#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace filterstab {

using Rng = std::mt19937_64;

// Stream splitting rule shared by every Monte Carlo routine:
//   stream_seed(master, trial) = splitmix64(master XOR trial)
// Trial k always draws from Rng(stream_seed(master, k)), so results do not
// depend on how trials are scheduled across threads.
std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t StreamSeed(std::uint64_t master_seed, std::uint64_t trial);

// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
double UniformUnit(Rng& rng);

// Inverse-CDF draw from a probability vector. Only indices with positive
// weight can be returned.
int SampleCategorical(std::span<const double> probs, Rng& rng);

}  // namespace filterstab
