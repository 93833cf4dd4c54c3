#pragma once

#include <cstdint>
#include <unordered_map>

namespace lunes::rng {

// Counter-based generator in the Random123 spirit: a draw is a pure function
// of (seed, entity, stream tag, counter words). Values are therefore
// independent of LP placement, worker scheduling and migrations, and two runs
// that evaluate the same decision consume the same uniform even when other
// parts of their histories diverge.

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t entity,
                                   std::uint64_t tag, std::uint64_t c0,
                                   std::uint64_t c1 = 0) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ (entity + kGolden));
  h = mix64(h ^ (tag + kGolden));
  h = mix64(h ^ (c0 + kGolden));
  h = mix64(h ^ (c1 + kGolden));
  return h;
}

// [0,1) with 53 random bits
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double keyed_unit(std::uint64_t seed, std::uint64_t entity,
                            std::uint64_t tag, std::uint64_t c0,
                            std::uint64_t c1 = 0) {
  return to_unit(keyed_bits(seed, entity, tag, c0, c1));
}

// Unbiased-enough bounded draw (multiply-high); bound must be > 0.
constexpr std::uint32_t bounded(std::uint64_t bits, std::uint32_t bound) {
  return static_cast<std::uint32_t>(
      (static_cast<unsigned __int128>(bits) * bound) >> 64);
}

// Stream tags. Keep values stable: corpora and traces are reproducible only
// if the keying never changes.
namespace tag {
constexpr std::uint64_t kGenerate = 1;      // c0 = timestep
constexpr std::uint64_t kForward = 2;       // c0 = origin<<32|seq, c1 = neighbor
constexpr std::uint64_t kStimulusPick = 3;  // c0 = origin, c1 = timestep
constexpr std::uint64_t kGraphGen = 4;      // c0 = running counter
constexpr std::uint64_t kSequence = 5;      // generic sequential streams
}  // namespace tag

// Seed derivation for corpus members and per-graph runs.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  return keyed_bits(master, k, 0xd1b54a32d192ed03ULL, 0);
}

// Sequential view of the keyed generator: one logical stream per
// (entity, purpose), advanced one counter per draw.
class EntityStream {
 public:
  EntityStream(std::uint64_t seed, std::uint64_t entity)
      : seed_(seed), entity_(entity) {}

  double draw(std::uint64_t purpose) {
    std::uint64_t c = counters_[purpose]++;
    return keyed_unit(seed_, entity_, tag::kSequence, purpose, c);
  }

  std::uint64_t draw_bits(std::uint64_t purpose) {
    std::uint64_t c = counters_[purpose]++;
    return keyed_bits(seed_, entity_, tag::kSequence, purpose, c);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t entity_;
  std::unordered_map<std::uint64_t, std::uint64_t> counters_;
};

}  // namespace lunes::rng
