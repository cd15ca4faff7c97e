#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace countmc {

// Fork-join pool. parallel_for carves [0, n) into chunks claimed through an
// atomic cursor; the calling thread works alongside the pool threads and
// blocks until the whole range is done. With one worker everything runs
// inline on the caller. The first exception thrown by any chunk is rethrown
// on the caller after the join.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int workers() const { return nworkers_; }

  using RangeBody = std::function<void(long, long)>;
  void parallel_for(long n, long chunk, const RangeBody& body);

 private:
  struct Job {
    std::atomic<long> next{0};
    long n = 0;
    long chunk = 1;
    const RangeBody* body = nullptr;
    std::mutex err_mu;
    std::exception_ptr error;
  };

  void worker_loop();
  static void work_on(Job& job);

  int nworkers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  Job* job_ = nullptr;
  long long epoch_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

// Fixed leaf width of the deterministic reduction tree. Leaf sums run
// left-to-right; leaf results combine in a serial pairwise tree, so the
// value is bitwise independent of worker count and scheduling.
constexpr std::size_t kReduceBlock = 1024;

// Serial pairwise combination (split at the midpoint) of precomputed values.
double pairwise_sum(const double* x, std::size_t n);

// Sum of f(i) for i in [0, n): leaves of kReduceBlock consecutive terms are
// summed serially (in parallel across leaves), then combined pairwise.
template <typename F>
double det_transform_sum(ThreadPool& pool, long n, F&& f) {
  if (n <= 0) return 0.0;
  const long nblocks =
      (n + static_cast<long>(kReduceBlock) - 1) / static_cast<long>(kReduceBlock);
  std::vector<double> sums(static_cast<std::size_t>(nblocks));
  const F& fn = f;
  pool.parallel_for(nblocks, 1, [&](long b0, long b1) {
    for (long b = b0; b < b1; ++b) {
      const long lo = b * static_cast<long>(kReduceBlock);
      const long hi = std::min(n, lo + static_cast<long>(kReduceBlock));
      double s = 0.0;
      for (long i = lo; i < hi; ++i) s += fn(i);
      sums[static_cast<std::size_t>(b)] = s;
    }
  });
  return pairwise_sum(sums.data(), sums.size());
}

}  // namespace countmc
