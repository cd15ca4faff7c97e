#include "countmc/parallel.hpp"

namespace countmc {

ThreadPool::ThreadPool(int workers) : nworkers_(std::max(1, workers)) {
  threads_.reserve(static_cast<std::size_t>(nworkers_ - 1));
  for (int i = 0; i + 1 < nworkers_; ++i)
    threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::parallel_for(long n, long chunk, const RangeBody& body) {
  if (n <= 0) return;
  if (chunk < 1) chunk = 1;
  if (threads_.empty() || n <= chunk) {
    body(0, n);
    return;
  }

  Job job;
  job.n = n;
  job.chunk = chunk;
  job.body = &body;
  {
    std::lock_guard<std::mutex> lk(mu_);
    job_ = &job;
    ++epoch_;
    pending_ = static_cast<int>(threads_.size());
  }
  cv_.notify_all();
  work_on(job);
  {
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [&] { return pending_ == 0; });
    job_ = nullptr;
  }
  if (job.error) std::rethrow_exception(job.error);
}

void ThreadPool::worker_loop() {
  long long seen = 0;
  for (;;) {
    Job* job = nullptr;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
      if (stop_) return;
      seen = epoch_;
      job = job_;
    }
    if (job) work_on(*job);
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }
}

void ThreadPool::work_on(Job& job) {
  for (;;) {
    const long begin = job.next.fetch_add(job.chunk, std::memory_order_relaxed);
    if (begin >= job.n) return;
    const long end = std::min(job.n, begin + job.chunk);
    try {
      (*job.body)(begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lk(job.err_mu);
      if (!job.error) job.error = std::current_exception();
    }
  }
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return x[0];
  const std::size_t mid = n / 2;
  return pairwise_sum(x, mid) + pairwise_sum(x + mid, n - mid);
}

}  // namespace countmc
