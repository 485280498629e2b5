#ifndef INNERATT_NN_RANDOM_HPP_
#define INNERATT_NN_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace inneratt {

// SplitMix64 finalizer; used to derive independent stream seeds from a base
// seed and stream coordinates.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index = 0);

// Seeded random stream. Sampling helpers avoid the implementation-defined
// std:: distributions so trajectories are reproducible bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  // Index drawn from a probability vector (need not be exactly normalized).
  std::size_t categorical(std::span<const double> probs);
  // Standard normal via Box-Muller.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace inneratt

#endif  // INNERATT_NN_RANDOM_HPP_
