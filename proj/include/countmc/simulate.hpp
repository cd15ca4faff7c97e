#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "countmc/streaming.hpp"
#include "countmc/types.hpp"

namespace countmc {

struct SimSpec {
  std::size_t G = 0;
  std::size_t N = 0;
  Matrix X;               // N x L
  std::vector<double> h;  // optional, defaults to zeros
  double nu = 2.0;
  double tau = 1.0;
  std::vector<double> theta;  // L
  std::vector<double> sigma;  // L, entries may be 0 (beta pinned at theta)
  std::vector<double> gamma_fixed;  // optional: length 1 (shared) or G
  std::uint64_t seed = 1;

  std::size_t L() const { return X.cols(); }
  void validate() const;
};

struct SimTruth {
  double nu = 0.0;
  double tau = 0.0;
  std::vector<double> theta, sigma;
  Matrix beta;                // G x L
  std::vector<double> gamma;  // G
};

// Ancestral draw from the model: beta_gl ~ N(theta_l, sigma_l^2),
// gamma_g ~ Inverse-Gamma(nu/2, nu tau/2), eps_gn ~ N(0, gamma_g),
// y_gn ~ Poisson(exp(h_n + eps_gn + X_n beta_g)). A Poisson mean beyond
// the overflow guard aborts with the offending coordinates.
std::pair<CountMatrix, SimTruth> generate(const SimSpec& spec);

// Duplicate whole copies of the columns up to N_target (must be a multiple
// of base N), then sample G_target gene rows with replacement.
CountMatrix resample(const CountMatrix& base, std::size_t G_target,
                     std::size_t N_target, std::uint64_t seed);

// Named built-in model matrices. "heterosis16x5" is the 16 x 5 Kronecker
// two-block design [A (x) 1_4 | 1_4 (x) (1,1,-1,-1)']; N must be a
// multiple of 16 (rows tile).
Matrix builtin_design(const std::string& name, std::size_t N);

// High-parent heterosis contrast for the built-in design:
// {2 beta_g2 + beta_g4 > 0 and 2 beta_g3 + beta_g4 > 0}.
ContrastSpec heterosis_contrast(std::size_t L = 5);

}  // namespace countmc
