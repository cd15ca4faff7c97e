#pragma once

#include <cstddef>
#include <vector>

#include "countmc/streaming.hpp"

namespace countmc {

struct RhatResult {
  double value = 1.0;
  bool degenerate = false;  // within-chain variance collapsed to zero
};

// Gelman-Rubin potential scale reduction factor from per-chain moments:
// B = (M/(C-1)) sum_c (mean_c - grand)^2, S_c^2 = (M/(M-1))(meansq - mean^2),
// W = avg S_c^2, rhat = sqrt(1 + (B/W - 1)/M). Requires C >= 2 chains with
// identical counts.
RhatResult gelman_rhat(const std::vector<MomentAccumulator>& chains);

// Same, from raw per-chain series (streamed through accumulators first).
RhatResult gelman_rhat_series(const std::vector<std::vector<double>>& chains);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Approximate equal-tail interval mean +/- z_{alpha/2} sqrt(meansq - mean^2).
// A variance more negative than rounding slack allows is reported as
// accumulator corruption.
Interval credible_interval(double mean, double meansq, double alpha);

struct EssResult {
  enum class Status { ok, undefined, degenerate };
  double value = 0.0;
  Status status = Status::ok;
};

// Effective sample size C*M / (2 sum_k G'_k - 1) where G_k are paired-lag
// autocorrelation sums (Geyer initial positive sequence, monotone-ized),
// autocovariances averaged across chains. Capped at the total sample count.
EssResult effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace countmc
