// Error taxonomy and a deterministic RNG shared by all modules.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace speechfcn {

enum class ErrorKind {
  format,       // malformed input file
  unsupported,  // recognized but unsupported encoding/feature
  too_short,    // input below the minimum length an operation needs
  shape,        // tensor/vector dimension mismatch
  state,        // API called out of order (e.g. backward before forward)
  degenerate,   // configuration produces a degenerate object (empty filter, ...)
  data,         // semantic data error (unknown id, bad label, schema mismatch)
  diverged,     // training produced a non-finite loss
  io,           // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Deterministic random source. All randomized behavior in the library goes
// through this class so that a fixed seed reproduces byte-identical runs.
// Distribution helpers are hand-rolled: std::uniform_*_distribution output
// is implementation-defined, mt19937's raw stream is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

  std::uint32_t next_u32() { return gen_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  long uniform_int(long lo, long hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>((static_cast<std::uint64_t>(next_u32()) * range) >> 32);
  }

  // Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<long>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937 gen_;
};

}  // namespace speechfcn
