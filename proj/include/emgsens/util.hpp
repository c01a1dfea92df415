#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>

namespace emgsens {

// Deterministic RNG. Uniform and normal variates are generated from the raw
// mt19937_64 stream with explicit bit arithmetic and Box-Muller, so the same
// seed yields the same sequence regardless of the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Derives an independent stream seed, used to give each subject its own
  // stream so parallel generation cannot change the output.
  static std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Runs body(i) for i in [0, n). jobs <= 0 means use hardware concurrency.
// Exceptions from workers are captured and rethrown on the calling thread.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& body);

std::uint64_t fnv1a64(std::string_view s);
std::string to_hex(std::uint64_t v);

// Shortest round-trip decimal form of v (std::to_chars). Deterministic, so
// repeated runs emit byte-identical files.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace emgsens
