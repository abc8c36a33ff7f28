#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace fixlab {

// Welford accumulator; merge() is Chan's parallel update.
struct RunningStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& other) noexcept {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(other.count);
    const double n = n_a + n_b;
    const double d = other.mean - mean;
    mean += d * (n_b / n);
    m2 += other.m2 + d * d * (n_a * n_b / n);
    count += other.count;
  }

  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double std_error() const noexcept {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

// Monte Carlo answer without model parameters attached.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replicates = 0;
  std::optional<std::uint64_t> seed;
};

struct FixationEstimate {
  double mean = 0.0;
  double std_error = 0.0;       // 0 for exact answers
  std::uint64_t replicates = 0;  // 0 for exact answers
  std::optional<std::uint64_t> seed;
  std::size_t n_sites = 0;
  double delta = 0.0;

  bool exact() const noexcept { return replicates == 0; }
};

inline unsigned default_jobs() noexcept {
  return std::max(1U, std::thread::hardware_concurrency());
}

// Replicates are processed in fixed-size chunks; each chunk is reduced in
// index order and the chunk results are merged in chunk order, so the result
// does not depend on the number of workers.
inline constexpr std::uint64_t kReplicateChunk = 4096;

// `make_worker()` is called once per thread and returns a callable
// double(std::uint64_t replicate). If any replicate throws, the exception of
// the lowest failing chunk is rethrown after all workers stop.
template <class WorkerFactory>
RunningStats run_replicates(std::uint64_t replicates, unsigned jobs, WorkerFactory&& make_worker) {
  const std::uint64_t chunks = (replicates + kReplicateChunk - 1) / kReplicateChunk;
  std::vector<RunningStats> partial(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> first_failure{chunks};

  auto body = [&] {
    auto replicate = make_worker();
    for (;;) {
      const std::uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= chunks) return;
      // Chunks below a failure still run, so the reported error is always
      // the one from the lowest failing chunk.
      if (c > first_failure.load(std::memory_order_relaxed)) continue;
      const std::uint64_t begin = c * kReplicateChunk;
      const std::uint64_t end = std::min(replicates, begin + kReplicateChunk);
      try {
        RunningStats local;
        for (std::uint64_t r = begin; r < end; ++r) local.push(replicate(r));
        partial[c] = local;
      } catch (...) {
        errors[c] = std::current_exception();
        auto seen = first_failure.load(std::memory_order_relaxed);
        while (c < seen && !first_failure.compare_exchange_weak(seen, c)) {
        }
      }
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(jobs == 0 ? 1 : jobs, 1, std::max<std::uint64_t>(chunks, 1)));
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  RunningStats total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace fixlab
