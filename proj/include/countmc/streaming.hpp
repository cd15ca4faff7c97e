#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "countmc/types.hpp"

namespace countmc {

// One-pass mean and mean-of-squares via the Welford recursion
// x_m = x_{m-1} + (v - x_{m-1})/m, with compensated addition so long
// large-offset streams keep absolute accuracy.
class MomentAccumulator {
 public:
  void update(double value) {
    ++count_;
    const double m = static_cast<double>(count_);
    add(mean_, mean_c_, (value - mean_) / m);
    add(meansq_, meansq_c_, (value * value - meansq_) / m);
  }

  long count() const { return count_; }
  double mean() const { return mean_; }
  double meansq() const { return meansq_; }

 private:
  static void add(double& sum, double& comp, double term) {
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }

  long count_ = 0;
  double mean_ = 0.0;
  double meansq_ = 0.0;
  double mean_c_ = 0.0;
  double meansq_c_ = 0.0;
};

enum class ParamFamily { beta_col, gamma, theta, sigma, nu, tau };

// A named scalar (or per-gene column) in the chain state. Symbolic forms:
// "beta[,2]", "gamma", "theta[1]", "sigma[2]", "nu", "tau"; indices 1-based.
struct ParamRef {
  ParamFamily family = ParamFamily::nu;
  std::size_t index = 0;  // column, 0-based internally

  bool per_gene() const {
    return family == ParamFamily::beta_col || family == ParamFamily::gamma;
  }
};

// Throws ConfigError for unknown names or indices outside [1, L].
ParamRef parse_param_ref(const std::string& name, std::size_t L);

struct ContrastTerm {
  std::vector<std::pair<ParamRef, double>> coeffs;
  double threshold = 0.0;
};

struct ContrastSpec {
  std::string id;
  std::vector<ContrastTerm> terms;
  bool per_gene = false;  // set from the referenced families

  void finalize();  // validates shape and infers scope
};

// Running mean of the conjunction indicator, one slot per gene for
// per-gene scope and a single slot otherwise. Strict inequalities; ties
// count as failure.
class ContrastAccumulator {
 public:
  ContrastAccumulator() = default;
  ContrastAccumulator(ContrastSpec spec, std::size_t G)
      : spec_(std::move(spec)), prob_(spec_.per_gene ? G : 1, 0.0) {}

  void update(const ChainState& state);

  const ContrastSpec& spec() const { return spec_; }
  long count() const { return count_; }
  const std::vector<double>& prob() const { return prob_; }

 private:
  ContrastSpec spec_;
  std::vector<double> prob_;
  long count_ = 0;
};

// Inclusion-exclusion for "A or B" from conjunction probabilities,
// clamped to [0, 1].
double disjunction_combine(double p1, double p2, double p12);

}  // namespace countmc
