#include "countmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "countmc/rng.hpp"

namespace countmc {

RhatResult gelman_rhat(const std::vector<MomentAccumulator>& chains) {
  const std::size_t C = chains.size();
  if (C < 2) throw ConfigError("gelman_rhat needs at least 2 chains");
  const long M = chains[0].count();
  if (M < 2) throw ConfigError("gelman_rhat needs at least 2 iterations");
  for (const auto& acc : chains)
    if (acc.count() != M)
      throw ConfigError("gelman_rhat requires equal iteration counts per chain");

  const double Md = static_cast<double>(M);
  double grand = 0.0;
  for (const auto& acc : chains) grand += acc.mean();
  grand /= static_cast<double>(C);

  double B = 0.0, W = 0.0;
  for (const auto& acc : chains) {
    const double dm = acc.mean() - grand;
    B += dm * dm;
    const double var = std::max(0.0, acc.meansq() - acc.mean() * acc.mean());
    W += (Md / (Md - 1.0)) * var;
  }
  B *= Md / static_cast<double>(C - 1);
  W /= static_cast<double>(C);

  if (!(W > 0.0)) return {1.0, true};
  return {std::sqrt(1.0 + (B / W - 1.0) / Md), false};
}

RhatResult gelman_rhat_series(const std::vector<std::vector<double>>& chains) {
  std::vector<MomentAccumulator> accs(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (double v : chains[c]) accs[c].update(v);
  return gelman_rhat(accs);
}

Interval credible_interval(double mean, double meansq, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ConfigError("credible_interval needs alpha in (0,1)");
  double var = meansq - mean * mean;
  const double slack = 1e-9 * std::max(1.0, std::fabs(meansq));
  if (var < -slack)
    throw ConfigError("moment accumulator corruption: meansq < mean^2");
  if (var < 0.0) var = 0.0;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(var);
  return {mean - half, mean + half};
}

namespace {

// Lag-t autocovariance averaged across chains, each chain centered at its
// own mean, biased 1/M normalization.
double avg_autocov(const std::vector<std::vector<double>>& chains,
                   const std::vector<double>& means, std::size_t t) {
  double total = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& x = chains[c];
    const double mu = means[c];
    const std::size_t M = x.size();
    double s = 0.0;
    for (std::size_t i = 0; i + t < M; ++i)
      s += (x[i] - mu) * (x[i + t] - mu);
    total += s / static_cast<double>(M);
  }
  return total / static_cast<double>(chains.size());
}

}  // namespace

EssResult effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return {0.0, EssResult::Status::undefined};
  const std::size_t M = chains[0].size();
  for (const auto& x : chains)
    if (x.size() != M)
      throw ConfigError("effective_sample_size requires equal-length chains");
  if (M < 4) return {0.0, EssResult::Status::undefined};

  std::vector<double> means(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    double s = 0.0;
    for (double v : chains[c]) s += v;
    means[c] = s / static_cast<double>(M);
  }

  const double c0 = avg_autocov(chains, means, 0);
  if (!(c0 > 0.0)) return {0.0, EssResult::Status::degenerate};

  const double total =
      static_cast<double>(chains.size()) * static_cast<double>(M);
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < M; ++k) {
    const double rho_even = avg_autocov(chains, means, 2 * k) / c0;
    const double rho_odd = avg_autocov(chains, means, 2 * k + 1) / c0;
    double pair = rho_even + rho_odd;
    if (pair <= 0.0) break;                     // initial positive sequence
    pair = std::min(pair, prev_pair);           // enforce monotone decrease
    prev_pair = pair;
    tau += pair;
  }
  tau = 2.0 * tau - 1.0;
  if (tau < 1.0) tau = 1.0;  // reporting cap: ESS never exceeds total draws
  return {total / tau, EssResult::Status::ok};
}

}  // namespace countmc
