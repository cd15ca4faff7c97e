#include "countmc/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "countmc/engine.hpp"
#include "countmc/model.hpp"

namespace countmc {

void SimSpec::validate() const {
  if (G < 1 || N < 1) throw ConfigError("simulation needs G >= 1 and N >= 1");
  if (X.rows() != N || X.cols() < 1)
    throw ConfigError("simulation model matrix must be N x L with L >= 1");
  if (theta.size() != L() || sigma.size() != L())
    throw ConfigError("theta and sigma must have length L");
  if (!h.empty() && h.size() != N)
    throw ConfigError("offset vector must have length N");
  for (double v : sigma)
    if (v < 0.0) throw ConfigError("sigma entries must be nonnegative");
  if (!(nu > 0.0) || !(tau > 0.0))
    throw ConfigError("nu and tau must be positive");
  if (!gamma_fixed.empty() && gamma_fixed.size() != 1 && gamma_fixed.size() != G)
    throw ConfigError("gamma_fixed must have length 1 or G");
}

std::pair<CountMatrix, SimTruth> generate(const SimSpec& spec) {
  spec.validate();
  const std::size_t G = spec.G, N = spec.N, L = spec.L();

  SimTruth truth;
  truth.nu = spec.nu;
  truth.tau = spec.tau;
  truth.theta = spec.theta;
  truth.sigma = spec.sigma;
  truth.beta = Matrix(G, L, 0.0);
  truth.gamma.assign(G, 0.0);

  CountMatrix out;
  out.counts = Grid<long long>(G, N, 0);
  out.genes.reserve(G);
  out.samples.reserve(N);
  for (std::size_t g = 0; g < G; ++g) out.genes.push_back("g" + std::to_string(g + 1));
  for (std::size_t n = 0; n < N; ++n) out.samples.push_back("s" + std::to_string(n + 1));

  const std::vector<double> h =
      spec.h.empty() ? std::vector<double>(N, 0.0) : spec.h;

  for (std::size_t g = 0; g < G; ++g) {
    RngStream rng = substream(spec.seed, 0, 0, site::id(site::kSim, g));
    for (std::size_t l = 0; l < L; ++l)
      truth.beta(g, l) = spec.theta[l] + spec.sigma[l] * rng.normal();
    if (!spec.gamma_fixed.empty()) {
      truth.gamma[g] =
          spec.gamma_fixed.size() == 1 ? spec.gamma_fixed[0] : spec.gamma_fixed[g];
      if (!(truth.gamma[g] > 0.0))
        throw ConfigError("gamma_fixed entries must be positive");
    } else {
      truth.gamma[g] = 1.0 / rng.gamma(spec.nu / 2.0, spec.nu * spec.tau / 2.0);
    }
    const double sd = std::sqrt(truth.gamma[g]);
    for (std::size_t n = 0; n < N; ++n) {
      const double eps = sd * rng.normal();
      double eta = 0.0;
      for (std::size_t l = 0; l < L; ++l) eta += spec.X(n, l) * truth.beta(g, l);
      const double arg = h[n] + eps + eta;
      if (arg > kExpClamp) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "simulated Poisson mean overflow at gene %zu, sample %zu "
                      "(log mean %.6g exceeds %.0f)",
                      g + 1, n + 1, arg, kExpClamp);
        throw SimulationError(buf);
      }
      const double lambda = std::exp(arg);
      if (lambda > 1e15) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "simulated Poisson mean %.6g at gene %zu, sample %zu is "
                      "too large for integer counts",
                      lambda, g + 1, n + 1);
        throw SimulationError(buf);
      }
      std::poisson_distribution<long long> pois(lambda);
      out.counts(g, n) = pois(rng);
    }
  }
  return {std::move(out), std::move(truth)};
}

CountMatrix resample(const CountMatrix& base, std::size_t G_target,
                     std::size_t N_target, std::uint64_t seed) {
  base.validate();
  const std::size_t G = base.G(), N = base.N();
  if (G_target < 1 || N_target < 1)
    throw ConfigError("resample targets must be >= 1");
  if (N_target % N != 0)
    throw ConfigError("target sample count must be a whole multiple of the "
                      "base sample count (datasets duplicate whole copies)");
  const std::size_t reps = N_target / N;

  CountMatrix out;
  out.counts = Grid<long long>(G_target, N_target, 0);
  out.samples.reserve(N_target);
  for (std::size_t r = 0; r < reps; ++r)
    for (std::size_t n = 0; n < N; ++n)
      out.samples.push_back(r == 0 ? base.samples[n]
                                   : base.samples[n] + "_r" + std::to_string(r + 1));
  out.genes.reserve(G_target);
  for (std::size_t i = 0; i < G_target; ++i) {
    RngStream rng = substream(seed, 0, 0, site::id(site::kResample, i));
    const std::size_t src = static_cast<std::size_t>(rng.uniform_int(G));
    out.genes.push_back(base.genes[src]);
    for (std::size_t r = 0; r < reps; ++r)
      for (std::size_t n = 0; n < N; ++n)
        out.counts(i, r * N + n) = base.counts(src, n);
  }
  out.duplicate_genes = true;
  return out;
}

Matrix builtin_design(const std::string& name, std::size_t N) {
  if (name != "heterosis16x5")
    throw ConfigError("unknown built-in design '" + name + "'");
  if (N == 0 || N % 16 != 0)
    throw ConfigError("heterosis16x5 needs a sample count that is a multiple "
                      "of 16");
  static const double A[4][4] = {{1, 1, -1, 0},
                                 {1, -1, 1, 0},
                                 {1, 1, 1, 1},
                                 {1, 1, 1, -1}};
  static const double block[4] = {1, 1, -1, -1};
  Matrix X(N, 5, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t r = n % 16;
    const std::size_t variety = r / 4;
    for (std::size_t l = 0; l < 4; ++l) X(n, l) = A[variety][l];
    X(n, 4) = block[r % 4];
  }
  return X;
}

ContrastSpec heterosis_contrast(std::size_t L) {
  ContrastSpec spec;
  spec.id = "highparent";
  ContrastTerm t1, t2;
  t1.coeffs = {{parse_param_ref("beta[,2]", L), 2.0},
               {parse_param_ref("beta[,4]", L), 1.0}};
  t2.coeffs = {{parse_param_ref("beta[,3]", L), 2.0},
               {parse_param_ref("beta[,4]", L), 1.0}};
  spec.terms = {t1, t2};
  spec.finalize();
  return spec;
}

}  // namespace countmc
