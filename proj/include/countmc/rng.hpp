#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace countmc {

// Philox4x64-10 keyed counter permutation (Salmon et al. construction,
// same round constants as Random123 and numpy.random.Philox). One block
// maps a 256-bit counter and 128-bit key to 256 bits of output.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key);

// One independent random stream addressed by (seed, chain, iteration, site).
// key = (seed, chain), counter = (iteration, site, block_index, 0), so
// streams for distinct addresses never share a counter block and the values
// drawn at one site cannot depend on scheduling or on other sites.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t chain, std::uint64_t iteration,
            std::uint64_t site)
      : ctr_{iteration, site, 0, 0}, key_{seed, chain}, pos_(4) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  // Uniform on the open interval (0, 1); safe to pass to log().
  double u01() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse CDF; exactly one variate consumed.
  double normal();

  // Gamma(shape, rate) by Marsaglia-Tsang squeeze (with the shape<1 boost).
  double gamma(double shape, double rate);

  // Unbiased uniform on {0, ..., n-1} by rejection.
  std::uint64_t uniform_int(std::uint64_t n);

 private:
  void refill() {
    buf_ = philox4x64(ctr_, key_);
    ++ctr_[2];
    pos_ = 0;
  }

  std::array<std::uint64_t, 4> ctr_;
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> buf_{};
  int pos_;
};

// Inverse standard normal CDF, rational approximation (Wichura's PPND16
// scheme), absolute error below 1e-9 over (0,1). Used for normal draws and
// credible-interval z values.
double normal_quantile(double p);

}  // namespace countmc
