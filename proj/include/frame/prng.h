#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace frame {

// SplitMix64 (Steele, Lea & Flood). Chosen because its output sequence is
// fully specified by a few lines of integer arithmetic, so shuffles are
// reproducible across compilers and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

// Independent sub-seed for a named stream of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Fisher-Yates, walking from the back: for i = n-1 .. 1 swap(i, uniform_below(i+1)).
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace frame
