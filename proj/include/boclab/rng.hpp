#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace boclab {

using Engine = std::mt19937_64;

// Name of the normal-variate source, recorded in run metadata.
// libstdc++ implements std::normal_distribution with the Marsaglia polar method.
inline constexpr std::string_view kNormalMethod = "std::mt19937_64 + std::normal_distribution (Marsaglia polar)";

// Class B streams use seed ^ kClassBSalt; class A uses the seed unchanged.
inline constexpr std::uint64_t kClassBSalt = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Child seed for sub-stream `stream` of `seed`. Every derived stream in the
// library goes through this function so the seed chain can be replayed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

// Stream tags for derive_seed; fixed values so stored manifests stay valid.
namespace streams {
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kEvaluation = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kTest = 4;
inline constexpr std::uint64_t kBasisA = 5;
inline constexpr std::uint64_t kBasisB = 6;
inline constexpr std::uint64_t kTrain = 7;
inline constexpr std::uint64_t kThreshold = 8;
inline constexpr std::uint64_t kMonteCarlo = 9;
inline constexpr std::uint64_t kRun = 10;
}  // namespace streams

}  // namespace boclab
