#pragma once

#include <cmath>
#include <cstdint>

#include "countmc/errors.hpp"
#include "countmc/rng.hpp"

namespace countmc {

struct SliceConfig {
  int max_step_out = 100;  // K
  long burnin = 0;         // M_B, tuning active while m <= burnin
  long tune_cutoff = 0;    // M_C, w held fixed while m <= tune_cutoff
  double w_init = 1.0;
  int max_shrink = 1000;
};

struct SliceVar {
  double w = 1.0;
  double w_aux = 0.0;
};

// Weighted-average width update: w_aux += m * |delta|, and once past the
// cutoff w = w_aux / (0.5 m (m+1)). A width collapsing below 1e-12 keeps
// the previous value so degenerate early chains cannot freeze the sampler.
inline void tune_update(SliceVar& var, long m, double delta,
                        const SliceConfig& cfg) {
  const double md = static_cast<double>(m);
  var.w_aux += md * delta;
  if (m > cfg.tune_cutoff) {
    const double w = var.w_aux / (0.5 * md * (md + 1.0));
    if (w >= 1e-12) var.w = w;
  }
}

// One stepping-out slice transition in log space. Draws log u below
// logf(x0), places a width-w interval at random around x0, steps each end
// out at most K_L / K_R = K - K_L times while still inside the slice, then
// shrinks uniform proposals toward x0 until one lands inside. Tuning runs
// while m <= burnin. Requires logf(x0) > -inf.
template <typename LogF>
double slice_step(LogF&& logf, double x0, SliceVar& var,
                  const SliceConfig& cfg, long m, RngStream& rng) {
  const double fx0 = logf(x0);
  const double logu = fx0 + std::log(rng.u01());
  const double w = var.w;

  double lo = x0 - w * rng.u01();
  double hi = lo + w;
  std::uint64_t kl =
      rng.uniform_int(static_cast<std::uint64_t>(cfg.max_step_out) + 1);
  std::uint64_t kr = static_cast<std::uint64_t>(cfg.max_step_out) - kl;
  while (kl > 0 && logu < logf(lo)) {
    lo -= w;
    --kl;
  }
  while (kr > 0 && logu < logf(hi)) {
    hi += w;
    --kr;
  }

  for (int it = 0; it < cfg.max_shrink; ++it) {
    const double x1 = lo + (hi - lo) * rng.u01();
    if (logf(x1) > logu) {
      if (m <= cfg.burnin) tune_update(var, m, std::fabs(x1 - x0), cfg);
      return x1;
    }
    if (x1 > x0)
      hi = x1;
    else
      lo = x1;
  }
  throw SamplerStallError("", -1, -1, x0, w, m);
}

}  // namespace countmc
