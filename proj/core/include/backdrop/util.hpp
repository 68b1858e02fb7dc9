#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace backdrop {

/// Deterministic RNG. Doubles are derived from the top 53 bits of the raw
/// stream so results do not depend on the standard library's distribution
/// implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 42) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be positive.
  size_t index(size_t n) { return static_cast<size_t>(next() % n); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double x);

/// Inverse of format_double; throws std::invalid_argument on junk.
double parse_double(std::string_view s);

long parse_long(std::string_view s);

/// Lowercase and split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

std::string join(const std::vector<std::string>& parts, const char* sep = " ");

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace backdrop
