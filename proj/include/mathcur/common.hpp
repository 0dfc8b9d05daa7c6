#ifndef MATHCUR_COMMON_HPP_
#define MATHCUR_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mathcur {

/// Bad user input: unreadable file, malformed config, missing metric.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A data invariant was violated at runtime (CLI exit code 2).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Hash128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  friend bool operator==(const Hash128&, const Hash128&) = default;
  friend auto operator<=>(const Hash128&, const Hash128&) = default;

  std::string hex() const;
};

struct Hash128Hasher {
  std::size_t operator()(const Hash128& h) const noexcept {
    return static_cast<std::size_t>(h.lo ^ (h.hi * 0x9e3779b97f4a7c15ULL));
  }
};

/// MurmurHash3 x64/128.
Hash128 hash128(std::string_view data, std::uint64_t seed = 0);

/// 64-bit variant used for MinHash permutations.
std::uint64_t hash64(std::string_view data, std::uint64_t seed = 0);

/// Process-wide worker count; 0 means hardware concurrency.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Runs body(i) for i in [0, n) split into contiguous chunks, one per worker.
/// Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Seeded generator with stdlib-independent draws. std::mt19937_64 output is
/// fixed by the standard but the std distributions are not, so bounded and
/// real draws are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mathcur

#endif  // MATHCUR_COMMON_HPP_
