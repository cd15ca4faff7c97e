#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "countmc/parallel.hpp"
#include "support/oracles.hpp"

using namespace countmc;

TEST_CASE("parallel_for covers the range exactly once") {
  for (int workers : {1, 2, 8}) {
    ThreadPool pool(workers);
    const long n = 10007;
    std::vector<std::atomic<int>> hits(n);
    pool.parallel_for(n, 64, [&](long lo, long hi) {
      for (long i = lo; i < hi; ++i) hits[i].fetch_add(1);
    });
    for (long i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
  }
}

TEST_CASE("parallel_for on an empty range is a no-op") {
  ThreadPool pool(4);
  bool ran = false;
  pool.parallel_for(0, 16, [&](long, long) { ran = true; });
  CHECK_FALSE(ran);
}

TEST_CASE("parallel_for propagates the first exception") {
  ThreadPool pool(4);
  auto boom = [&](long lo, long) {
    if (lo == 0) throw std::runtime_error("chunk failure");
  };
  CHECK_THROWS_AS(pool.parallel_for(1000, 10, boom), std::runtime_error);
  // the pool survives and keeps working afterwards
  std::atomic<long> total{0};
  pool.parallel_for(100, 7, [&](long lo, long hi) { total += hi - lo; });
  CHECK(total.load() == 100);
}

TEST_CASE("pairwise_sum equals a compensated reference") {
  std::vector<double> x(12345);
  std::uint64_t s = 88172645463325252ull;
  for (auto& v : x) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v = (static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5) * 1e6;
  }
  const double ref = oracles::csum(x);
  const double got = pairwise_sum(x.data(), x.size());
  CHECK(got == doctest::Approx(ref).epsilon(1e-12));
  CHECK(pairwise_sum(x.data(), 0) == 0.0);
  CHECK(pairwise_sum(x.data(), 1) == x[0]);
}

TEST_CASE("det_transform_sum is bitwise identical across worker counts") {
  const long n = 100000;
  auto f = [](long i) {
    const double t = static_cast<double>(i + 1);
    return std::sin(t) / t + 1e-9 * t;
  };
  ThreadPool p1(1);
  const double r1 = det_transform_sum(p1, n, f);
  for (int workers : {2, 3, 8}) {
    ThreadPool pw(workers);
    for (int rep = 0; rep < 3; ++rep)
      CHECK(det_transform_sum(pw, n, f) == r1);
  }
}

TEST_CASE("det_transform_sum agrees with a compensated reference") {
  const long n = 54321;
  std::vector<double> x(n);
  for (long i = 0; i < n; ++i)
    x[i] = std::cos(0.01 * static_cast<double>(i)) * 1e3;
  ThreadPool pool(4);
  const double got = det_transform_sum(pool, n, [&](long i) { return x[i]; });
  CHECK(got == doctest::Approx(oracles::csum(x)).epsilon(1e-12));
}

TEST_CASE("small ranges run inline") {
  ThreadPool pool(8);
  std::vector<int> hits(5, 0);
  pool.parallel_for(5, 1024, [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) ++hits[i];
  });
  for (int h : hits) CHECK(h == 1);
}
