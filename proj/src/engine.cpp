#include "countmc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace countmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double clamp_interior(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

}  // namespace

void RunConfig::resolve() {
  if (chains < 1) throw ConfigError("chains must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (burnin < 1) throw ConfigError("burnin must be >= 1");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (save_genes < 0) throw ConfigError("save_genes must be >= 0");
  if (slice.max_step_out < 1) throw ConfigError("max_step_out must be >= 1");
  if (tune_cutoff < 0) tune_cutoff = std::min<long>(500, burnin / 10);
  if (tune_cutoff >= burnin)
    throw ConfigError("tune_cutoff must be less than burnin (M_C < M_B)");
  slice.burnin = burnin;
  slice.tune_cutoff = tune_cutoff;
  if (!(slice.w_init > 0.0)) throw ConfigError("w_init must be positive");
  if (slice.max_shrink < 1) throw ConfigError("max_shrink must be >= 1");
}

GibbsEngine::GibbsEngine(const CountMatrix& data, const ModelSpec& spec,
                         RunConfig cfg, std::vector<ContrastSpec> contrasts)
    : data_(data), spec_(spec), cfg_(std::move(cfg)),
      contrasts_(std::move(contrasts)) {
  data_.validate();
  spec_.validate();
  if (spec_.N() != data_.N())
    throw ConfigError("model matrix rows must match the sample count");
  cfg_.resolve();
  for (auto& c : contrasts_) c.finalize();

  const std::size_t G = data_.G(), N = data_.N(), L = spec_.L();

  A_ = Matrix(G, L, 0.0);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t n = 0; n < N; ++n) {
      const double y = static_cast<double>(data_.counts(g, n));
      for (std::size_t l = 0; l < L; ++l) A_(g, l) += y * spec_.X(n, l);
    }

  colgroups_.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t n = 0; n < N; ++n) {
      const double v = spec_.X(n, l);
      if (v == 0.0) continue;
      auto it = std::find_if(colgroups_[l].begin(), colgroups_[l].end(),
                             [v](const ColGroup& grp) { return grp.value == v; });
      if (it == colgroups_[l].end()) {
        colgroups_[l].push_back({v, {n}});
      } else {
        it->idx.push_back(n);
      }
    }
  }

  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.save_genes), G);
  if (k > 0) {
    std::vector<std::size_t> idx(G);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    RngStream sel = substream(cfg_.seed, 0, 0, site::id(site::kSaveSel, 0));
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(sel.uniform_int(G - i));
      std::swap(idx[i], idx[j]);
    }
    saved_genes_.assign(idx.begin(), idx.begin() + static_cast<long>(k));
    std::sort(saved_genes_.begin(), saved_genes_.end());
  }
}

long GibbsEngine::gene_chunk(ThreadPool& pool) const {
  const long G = static_cast<long>(data_.G());
  return std::max<long>(1, G / (8 * pool.workers()));
}

ChainState GibbsEngine::initial_state(long chain) const {
  const std::size_t G = data_.G(), N = data_.N(), L = spec_.L();
  ChainState st(G, N, L);

  double hbar = 0.0;
  for (double v : spec_.h) hbar += v;
  hbar /= static_cast<double>(N);

  for (std::size_t g = 0; g < G; ++g) {
    double mean = 0.0;
    for (std::size_t n = 0; n < N; ++n)
      mean += static_cast<double>(data_.counts(g, n));
    mean /= static_cast<double>(N);
    st.beta(g, 0) = std::log(mean + 1.0) - hbar;
  }
  double tbar = 0.0;
  for (std::size_t g = 0; g < G; ++g) tbar += st.beta(g, 0);
  st.theta[0] = tbar / static_cast<double>(G);

  if (chain > 0) {
    const auto seed = cfg_.seed;
    const auto ch = static_cast<std::uint64_t>(chain);
    auto z = [&](std::uint64_t family, std::uint64_t flat) {
      return 0.5 * substream(seed, ch, 0, site::id(family, flat)).normal();
    };
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t n = 0; n < N; ++n)
        st.eps(g, n) += z(site::kEps, g * N + n);
      st.gamma[g] = std::max(1e-3, st.gamma[g] + z(site::kGamma, g));
      for (std::size_t l = 0; l < L; ++l)
        st.beta(g, l) += z(site::kBeta, g * L + l);
    }
    for (std::size_t l = 0; l < L; ++l) {
      st.theta[l] += z(site::kTheta, l);
      const double s = spec_.priors.s[l];
      st.sigma[l] =
          clamp_interior(st.sigma[l] + z(site::kSigma, l), 1e-6 * s,
                         (1.0 - 1e-6) * s);
    }
    st.nu = clamp_interior(st.nu + z(site::kNu, 0), 1e-6 * spec_.priors.d,
                           (1.0 - 1e-6) * spec_.priors.d);
    st.tau = std::max(1e-3, st.tau + z(site::kTau, 0));
  }
  return st;
}

void GibbsEngine::refresh_xb(ChainState& state, EngineScratch& scratch,
                             ThreadPool& pool) const {
  const std::size_t N = data_.N(), L = spec_.L();
  pool.parallel_for(
      static_cast<long>(data_.G()), gene_chunk(pool), [&](long g0, long g1) {
        for (long g = g0; g < g1; ++g) {
          const double* beta = state.beta.row(static_cast<std::size_t>(g));
          double* xb = scratch.xb.row(static_cast<std::size_t>(g));
          for (std::size_t n = 0; n < N; ++n) {
            double acc = 0.0;
            for (std::size_t l = 0; l < L; ++l) acc += spec_.X(n, l) * beta[l];
            xb[n] = acc;
          }
        }
      });
}

void GibbsEngine::iterate(ChainState& state, TuningState& tuning, long chain,
                          long m, ThreadPool& pool, EngineScratch& scratch,
                          ClampCounter* clamps, StepTimings* timings,
                          std::vector<int>* step5_trace) const {
  const std::size_t G = data_.G(), N = data_.N(), L = spec_.L();
  const auto seed = cfg_.seed;
  const auto ch = static_cast<std::uint64_t>(chain);
  const auto it_idx = static_cast<std::uint64_t>(m);
  const SliceConfig& scfg = cfg_.slice;
  const long chunk = gene_chunk(pool);
  const bool direct = cfg_.sampler_mode == SamplerMode::conjugate_direct;

  auto stamp = [&](int step, Clock::time_point t0) {
    if (timings) timings->seconds[static_cast<std::size_t>(step - 1)] +=
        seconds_since(t0);
  };

  // Step 1: eps_gn, conditionally independent across (g, n).
  auto t0 = Clock::now();
  refresh_xb(state, scratch, pool);
  pool.parallel_for(static_cast<long>(G), chunk, [&](long g0, long g1) {
    for (long gi = g0; gi < g1; ++gi) {
      const auto g = static_cast<std::size_t>(gi);
      const long long* y = data_.counts.row(g);
      const double* xb = scratch.xb.row(g);
      double* eps = state.eps.row(g);
      const double gam = state.gamma[g];
      for (std::size_t n = 0; n < N; ++n) {
        RngStream rng =
            substream(seed, ch, it_idx, site::id(site::kEps, g * N + n));
        auto logf = [&](double e) {
          return log_fc_epsilon(y[n], spec_.h[n], xb[n], gam, e, clamps);
        };
        try {
          eps[n] = slice_step(logf, eps[n], tuning.eps[g * N + n], scfg, m, rng);
        } catch (const SamplerStallError& err) {
          throw err.with_coords("epsilon", gi + 1, static_cast<long>(n) + 1);
        }
      }
    }
  });
  stamp(1, t0);

  // Step 2: gamma_g, slice on the inverse-gamma full conditional or a
  // direct conjugate draw.
  t0 = Clock::now();
  pool.parallel_for(static_cast<long>(G), chunk, [&](long g0, long g1) {
    for (long gi = g0; gi < g1; ++gi) {
      const auto g = static_cast<std::size_t>(gi);
      const auto [shape, scale] =
          gamma_fc_params(state.nu, state.tau, state.eps.row(g), N);
      RngStream rng = substream(seed, ch, it_idx, site::id(site::kGamma, g));
      if (direct) {
        state.gamma[g] = 1.0 / rng.gamma(shape, scale);
      } else {
        auto logf = [&](double x) { return log_invgamma(x, shape, scale); };
        try {
          state.gamma[g] =
              slice_step(logf, state.gamma[g], tuning.gamma[g], scfg, m, rng);
        } catch (const SamplerStallError& err) {
          throw err.with_coords("gamma", gi + 1, -1);
        }
      }
    }
  });
  stamp(2, t0);

  // Step 3: reductions over gamma feed the nu slice.
  t0 = Clock::now();
  const double sum_log_gamma = det_transform_sum(
      pool, static_cast<long>(G),
      [&](long g) { return std::log(state.gamma[static_cast<std::size_t>(g)]); });
  const double sum_inv_gamma = det_transform_sum(
      pool, static_cast<long>(G),
      [&](long g) { return 1.0 / state.gamma[static_cast<std::size_t>(g)]; });
  {
    RngStream rng = substream(seed, ch, it_idx, site::id(site::kNu, 0));
    auto logf = [&](double v) {
      return log_fc_nu(v, G, state.tau, sum_log_gamma, sum_inv_gamma,
                       spec_.priors.d);
    };
    try {
      state.nu = slice_step(logf, state.nu, tuning.nu, scfg, m, rng);
    } catch (const SamplerStallError& err) {
      throw err.with_coords("nu", -1, -1);
    }
  }
  stamp(3, t0);

  // Step 4: tau, reusing the inverse-gamma reduction.
  t0 = Clock::now();
  {
    const auto [shape, rate] = tau_fc_params(spec_.priors.a, spec_.priors.b, G,
                                             state.nu, sum_inv_gamma);
    RngStream rng = substream(seed, ch, it_idx, site::id(site::kTau, 0));
    if (direct) {
      state.tau = rng.gamma(shape, rate);
    } else {
      auto logf = [&](double x) { return log_gamma_rate(x, shape, rate); };
      try {
        state.tau = slice_step(logf, state.tau, tuning.tau, scfg, m, rng);
      } catch (const SamplerStallError& err) {
        throw err.with_coords("tau", -1, -1);
      }
    }
  }
  stamp(4, t0);

  // Step 5: beta columns, sequential over l with a barrier between
  // columns; parallel across genes inside a column. The slice target uses
  // exp(base + X_nl b) = exp(base) exp(X_nl b) grouped over the distinct
  // nonzero column entries, so each density evaluation costs one exp per
  // group instead of one per sample.
  t0 = Clock::now();
  pool.parallel_for(static_cast<long>(G), chunk, [&](long g0, long g1) {
    for (long gi = g0; gi < g1; ++gi) {
      const auto g = static_cast<std::size_t>(gi);
      const double* eps = state.eps.row(g);
      const double* xb = scratch.xb.row(g);
      double* lp = scratch.lp.row(g);
      for (std::size_t n = 0; n < N; ++n) lp[n] = spec_.h[n] + eps[n] + xb[n];
    }
  });
  for (std::size_t l = 0; l < L; ++l) {
    if (step5_trace) step5_trace->push_back(static_cast<int>(l) + 1);
    const auto& groups = colgroups_[l];
    const double theta_l = state.theta[l];
    const double sig2 = state.sigma[l] * state.sigma[l];
    pool.parallel_for(static_cast<long>(G), chunk, [&](long g0, long g1) {
      std::vector<double> S(groups.size()), logS(groups.size());
      for (long gi = g0; gi < g1; ++gi) {
        const auto g = static_cast<std::size_t>(gi);
        double* lp = scratch.lp.row(g);
        const double bold = state.beta(g, l);
        for (std::size_t j = 0; j < groups.size(); ++j) {
          double s = 0.0;
          for (std::size_t n : groups[j].idx)
            s += clamped_exp(lp[n] - groups[j].value * bold, clamps);
          S[j] = s;
          logS[j] = std::log(s);
        }
        const double a = A_(g, l);
        auto logf = [&](double b) {
          double tot = a * b;
          for (std::size_t j = 0; j < groups.size(); ++j) {
            const double t = groups[j].value * b;
            if (logS[j] + t > kExpClamp) {
              if (clamps) clamps->bump();
              tot -= std::exp(kExpClamp);
            } else if (S[j] > 0.0) {
              tot -= S[j] * std::exp(t);
            }
          }
          const double zz = b - theta_l;
          return tot - zz * zz / (2.0 * sig2);
        };
        RngStream rng =
            substream(seed, ch, it_idx, site::id(site::kBeta, g * L + l));
        double bnew;
        try {
          bnew = slice_step(logf, bold, tuning.beta[g * L + l], scfg, m, rng);
        } catch (const SamplerStallError& err) {
          throw err.with_coords("beta", gi + 1, static_cast<long>(l) + 1);
        }
        state.beta(g, l) = bnew;
        if (bnew != bold)
          for (std::size_t j = 0; j < groups.size(); ++j)
            for (std::size_t n : groups[j].idx)
              lp[n] += groups[j].value * (bnew - bold);
      }
    });
    if (step5_trace) step5_trace->push_back(-(static_cast<int>(l) + 1));
  }
  stamp(5, t0);

  // Step 6: theta_l from the conjugate normal after a beta reduction.
  t0 = Clock::now();
  for (std::size_t l = 0; l < L; ++l) {
    const double sum_beta = det_transform_sum(
        pool, static_cast<long>(G),
        [&](long g) { return state.beta(static_cast<std::size_t>(g), l); });
    const auto [mean, sd] =
        theta_fc_params(sum_beta, G, state.sigma[l], spec_.priors.c[l]);
    RngStream rng = substream(seed, ch, it_idx, site::id(site::kTheta, l));
    state.theta[l] = mean + sd * rng.normal();
  }
  stamp(6, t0);

  // Step 7: sigma_l slice on (0, s_l) after the squared-deviation reduction.
  t0 = Clock::now();
  for (std::size_t l = 0; l < L; ++l) {
    const double theta_l = state.theta[l];
    const double ss = det_transform_sum(
        pool, static_cast<long>(G), [&](long g) {
          const double dlt = state.beta(static_cast<std::size_t>(g), l) - theta_l;
          return dlt * dlt;
        });
    RngStream rng = substream(seed, ch, it_idx, site::id(site::kSigma, l));
    auto logf = [&](double sv) {
      return log_fc_sigma(sv, G, ss, spec_.priors.s[l]);
    };
    try {
      state.sigma[l] =
          slice_step(logf, state.sigma[l], tuning.sigma[l], scfg, m, rng);
    } catch (const SamplerStallError& err) {
      throw err.with_coords("sigma", static_cast<long>(l) + 1, -1);
    }
  }
  stamp(7, t0);
}

void GibbsEngine::iterate(ChainState& state, TuningState& tuning, long chain,
                          long m, ThreadPool& pool) const {
  EngineScratch scratch(data_.G(), data_.N());
  iterate(state, tuning, chain, m, pool, scratch);
}

ChainOutput GibbsEngine::run_chain(long chain, ThreadPool& pool) const {
  const std::size_t G = data_.G(), N = data_.N(), L = spec_.L();
  ChainOutput out;
  out.chain = chain;
  out.saved_genes = saved_genes_;
  out.theta_acc.resize(L);
  out.sigma_acc.resize(L);
  out.beta_acc.resize(G * L);
  out.gamma_acc.resize(G);
  out.eps_acc.resize(G * N);
  for (const auto& spec : contrasts_) out.contrasts.emplace_back(spec, G);

  out.sample_names = {"nu", "tau"};
  for (std::size_t l = 0; l < L; ++l)
    out.sample_names.push_back("theta[" + std::to_string(l + 1) + "]");
  for (std::size_t l = 0; l < L; ++l)
    out.sample_names.push_back("sigma[" + std::to_string(l + 1) + "]");
  for (std::size_t g : saved_genes_) {
    for (std::size_t l = 0; l < L; ++l)
      out.sample_names.push_back("beta[" + std::to_string(g + 1) + "," +
                                 std::to_string(l + 1) + "]");
    out.sample_names.push_back("gamma[" + std::to_string(g + 1) + "]");
  }
  out.samples.assign(out.sample_names.size(), {});

  ChainState state = initial_state(chain);
  TuningState tuning(G, N, L, cfg_.slice.w_init);
  EngineScratch scratch(G, N);
  ClampCounter clamps;

  const long total = cfg_.burnin + cfg_.iterations;
  for (long m = 1; m <= total; ++m) {
    iterate(state, tuning, chain, m, pool, scratch, &clamps, &out.timings);

    if (m > cfg_.burnin) {
      out.nu_acc.update(state.nu);
      out.tau_acc.update(state.tau);
      for (std::size_t l = 0; l < L; ++l) {
        out.theta_acc[l].update(state.theta[l]);
        out.sigma_acc[l].update(state.sigma[l]);
      }
      pool.parallel_for(
          static_cast<long>(G), gene_chunk(pool), [&](long g0, long g1) {
            for (long gi = g0; gi < g1; ++gi) {
              const auto g = static_cast<std::size_t>(gi);
              for (std::size_t l = 0; l < L; ++l)
                out.beta_acc[g * L + l].update(state.beta(g, l));
              out.gamma_acc[g].update(state.gamma[g]);
              const double* eps = state.eps.row(g);
              for (std::size_t n = 0; n < N; ++n)
                out.eps_acc[g * N + n].update(eps[n]);
            }
          });
      for (auto& acc : out.contrasts) acc.update(state);

      if ((m - cfg_.burnin) % cfg_.thin == 0) {
        out.sample_iters.push_back(m);
        std::size_t col = 0;
        out.samples[col++].push_back(state.nu);
        out.samples[col++].push_back(state.tau);
        for (std::size_t l = 0; l < L; ++l)
          out.samples[col++].push_back(state.theta[l]);
        for (std::size_t l = 0; l < L; ++l)
          out.samples[col++].push_back(state.sigma[l]);
        for (std::size_t g : saved_genes_) {
          for (std::size_t l = 0; l < L; ++l)
            out.samples[col++].push_back(state.beta(g, l));
          out.samples[col++].push_back(state.gamma[g]);
        }
      }
    }
    if (progress_) progress_(chain, m, total);
  }

  out.clamp_events = clamps.count();
  out.final_state = std::move(state);
  return out;
}

std::vector<ChainOutput> GibbsEngine::run() const {
  const long C = cfg_.chains;
  std::vector<ChainOutput> outs(static_cast<std::size_t>(C));
  if (cfg_.concurrent_chains && C > 1) {
    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex err_mu;
    threads.reserve(static_cast<std::size_t>(C));
    for (long c = 0; c < C; ++c)
      threads.emplace_back([&, c] {
        try {
          ThreadPool pool(1);
          outs[static_cast<std::size_t>(c)] = run_chain(c, pool);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!error) error = std::current_exception();
        }
      });
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
  } else {
    ThreadPool pool(cfg_.workers);
    for (long c = 0; c < C; ++c)
      outs[static_cast<std::size_t>(c)] = run_chain(c, pool);
  }
  return outs;
}

}  // namespace countmc
