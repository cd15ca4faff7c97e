#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "countmc/model.hpp"
#include "countmc/parallel.hpp"
#include "countmc/rng.hpp"
#include "countmc/slice.hpp"
#include "countmc/streaming.hpp"
#include "countmc/types.hpp"

namespace countmc {

enum class SamplerMode { slice_faithful, conjugate_direct };

struct RunConfig {
  long chains = 4;
  long iterations = 4000;  // post burn-in
  long burnin = 2000;
  long tune_cutoff = -1;  // -1 resolves to min(500, burnin/10)
  long thin = 20;
  std::uint64_t seed = 1;
  SliceConfig slice;
  long save_genes = 20;
  int workers = 1;
  SamplerMode sampler_mode = SamplerMode::slice_faithful;
  bool concurrent_chains = false;

  // Fills slice.burnin / slice.tune_cutoff and validates ranges.
  void resolve();
};

// Draw-site addressing for random substreams: every stochastic draw in the
// program owns the (family, flat index) pair below, so identical
// (seed, chain, iteration, site) always reproduce the same variates no
// matter which worker executes them.
namespace site {
constexpr std::uint64_t kEps = 1, kGamma = 2, kNu = 3, kTau = 4, kBeta = 5,
                        kTheta = 6, kSigma = 7, kSaveSel = 8, kSim = 9,
                        kResample = 10;
inline std::uint64_t id(std::uint64_t family, std::uint64_t flat) {
  return (family << 56) | flat;
}
}  // namespace site

inline RngStream substream(std::uint64_t seed, std::uint64_t chain,
                           std::uint64_t iteration, std::uint64_t site_id) {
  return RngStream(seed, chain, iteration, site_id);
}

// Per slice-sampled scalar width state: eps (G x N), gamma (G),
// beta (G x L), sigma (L), and the nu / tau scalars.
struct TuningState {
  std::vector<SliceVar> eps;
  std::vector<SliceVar> gamma;
  std::vector<SliceVar> beta;
  std::vector<SliceVar> sigma;
  SliceVar nu, tau;

  TuningState() = default;
  TuningState(std::size_t G, std::size_t N, std::size_t L, double w_init) {
    const SliceVar init{w_init, 0.0};
    eps.assign(G * N, init);
    gamma.assign(G, init);
    beta.assign(G * L, init);
    sigma.assign(L, init);
    nu = tau = init;
  }
};

// Reusable per-chain workspace: cached X beta products and linear
// predictors, rebuilt from the current state every iteration.
struct EngineScratch {
  Matrix xb;  // G x N, X_n beta_g
  Matrix lp;  // G x N, h + eps + xb
  EngineScratch() = default;
  EngineScratch(std::size_t G, std::size_t N)
      : xb(G, N, 0.0), lp(G, N, 0.0) {}
};

struct StepTimings {
  std::array<double, 7> seconds{};  // wall time per sweep step
};

struct ChainOutput {
  long chain = 0;

  MomentAccumulator nu_acc, tau_acc;
  std::vector<MomentAccumulator> theta_acc, sigma_acc;  // L
  std::vector<MomentAccumulator> beta_acc;              // G x L row-major
  std::vector<MomentAccumulator> gamma_acc;             // G
  std::vector<MomentAccumulator> eps_acc;               // G x N row-major
  std::vector<ContrastAccumulator> contrasts;

  std::vector<std::string> sample_names;      // retained thinned columns
  std::vector<std::vector<double>> samples;   // [column][row]
  std::vector<long> sample_iters;             // global iteration per row
  std::vector<std::size_t> saved_genes;

  StepTimings timings;
  std::uint64_t clamp_events = 0;
  ChainState final_state;
};

class GibbsEngine {
 public:
  GibbsEngine(const CountMatrix& data, const ModelSpec& spec, RunConfig cfg,
              std::vector<ContrastSpec> contrasts = {});

  const RunConfig& config() const { return cfg_; }
  const std::vector<ContrastSpec>& contrast_specs() const { return contrasts_; }
  const std::vector<std::size_t>& saved_genes() const { return saved_genes_; }

  ChainState initial_state(long chain) const;

  // One full Gibbs sweep at global iteration m (1-based). Tuning is active
  // while m <= burnin. step5_trace, when given, receives +(l+1) when the
  // beta column phase l begins and -(l+1) when its barrier completes.
  void iterate(ChainState& state, TuningState& tuning, long chain, long m,
               ThreadPool& pool, EngineScratch& scratch,
               ClampCounter* clamps = nullptr, StepTimings* timings = nullptr,
               std::vector<int>* step5_trace = nullptr) const;

  void iterate(ChainState& state, TuningState& tuning, long chain, long m,
               ThreadPool& pool) const;

  ChainOutput run_chain(long chain, ThreadPool& pool) const;

  // All chains: sequentially on a shared pool by default, or one thread
  // per chain when cfg.concurrent_chains is set.
  std::vector<ChainOutput> run() const;

  using Progress = std::function<void(long chain, long m, long total)>;
  void set_progress(Progress fn) { progress_ = std::move(fn); }

 private:
  struct ColGroup {
    double value;                    // shared nonzero X entry
    std::vector<std::size_t> idx;    // samples carrying it
  };

  void refresh_xb(ChainState& state, EngineScratch& scratch,
                  ThreadPool& pool) const;
  long gene_chunk(ThreadPool& pool) const;

  const CountMatrix& data_;
  const ModelSpec& spec_;
  RunConfig cfg_;
  std::vector<ContrastSpec> contrasts_;
  std::vector<std::size_t> saved_genes_;
  Matrix A_;  // G x L, sum_n y_gn X_nl
  std::vector<std::vector<ColGroup>> colgroups_;  // per column
  Progress progress_;
};

}  // namespace countmc
