#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dftrig {

inline constexpr const char* kVersion = "0.1.0";

// Error hierarchy; the CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidSpecError : Error { using Error::Error; };
struct UnknownTokenError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct EmptySegmentError : Error { using Error::Error; };
struct EmptyCandidateError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct CheckpointFormatError : Error { using Error::Error; };
struct TrainingFailureError : Error { using Error::Error; };
struct InvalidConfigError : Error { using Error::Error; };
struct EmptyClassError : Error { using Error::Error; };
struct VocabMismatchError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Token sequence with per-token segment tags (0 everywhere in single mode,
// 0=premise / 1=hypothesis in pair mode).
struct TokenSeq {
  std::vector<int> ids;
  std::vector<int> segments;

  TokenSeq() = default;
  TokenSeq(std::vector<int> i, std::vector<int> s)
      : ids(std::move(i)), segments(std::move(s)) {}
  static TokenSeq single(std::vector<int> i) {
    std::vector<int> segs(i.size(), 0);
    return TokenSeq(std::move(i), std::move(segs));
  }
  std::size_t size() const { return ids.size(); }
  bool operator==(const TokenSeq& o) const = default;
};

struct LabeledExample {
  TokenSeq seq;
  int label = 0;
};

// Deterministic RNG: mt19937_64 plus hand-rolled value mapping, so results do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), unbiased
  int uniform_int(int n) {
    if (n <= 0) throw IndexError("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(static_cast<int>(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Process-wide worker count (CLI --threads). Work is partitioned into
// per-index slots and reduced sequentially, so results never depend on it.
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> n{0};  // 0 = use hardware_concurrency
  return n;
}
inline void set_thread_count(int n) { thread_count_slot().store(n); }
inline int effective_thread_count() {
  int n = thread_count_slot().load();
  if (n > 0) return n;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n). Deterministic output: fn writes only to slot i.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int workers = std::min<std::size_t>(effective_thread_count(), n);
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dftrig
