#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "countmc/errors.hpp"

namespace countmc {

// Dense row-major rectangular array. Rows come first in every index pair,
// matching the (gene, sample) and (gene, effect) layouts used throughout.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T())
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  T* row(std::size_t r) { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ &&
           data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Grid<double>;

// G x N nonnegative counts with row (gene) and column (sample) labels.
struct CountMatrix {
  std::vector<std::string> genes;
  std::vector<std::string> samples;
  Grid<long long> counts;
  bool duplicate_genes = false;

  std::size_t G() const { return counts.rows(); }
  std::size_t N() const { return counts.cols(); }

  void validate() const;
};

struct PriorConfig {
  double a = 1.0;
  double b = 1.0;
  double d = 1000.0;
  std::vector<double> c;  // prior sd of theta_l, default 10
  std::vector<double> s;  // upper bound of Uniform prior on sigma_l, default 100

  // Fills c and s with the defaults for an L-column model matrix when unset.
  void resolve(std::size_t L);
  void validate(std::size_t L) const;
};

struct ModelSpec {
  Matrix X;               // N x L
  std::vector<double> h;  // length N, log-scale offsets
  PriorConfig priors;

  std::size_t N() const { return X.rows(); }
  std::size_t L() const { return X.cols(); }

  void validate() const;  // includes the full-column-rank check on X
};

// One iteration's parameter values.
struct ChainState {
  Matrix eps;                 // G x N
  std::vector<double> gamma;  // G
  Matrix beta;                // G x L
  std::vector<double> theta;  // L
  std::vector<double> sigma;  // L
  double nu = 2.0;
  double tau = 1.0;

  ChainState() = default;
  ChainState(std::size_t G, std::size_t N, std::size_t L)
      : eps(G, N, 0.0),
        gamma(G, 1.0),
        beta(G, L, 0.0),
        theta(L, 0.0),
        sigma(L, 1.0) {}

  std::size_t G() const { return gamma.size(); }

  // Throws ConfigError when any invariant is violated (positivity of gamma
  // and tau, nu in (0,d), sigma_l in (0,s_l), all values finite).
  void check(const PriorConfig& priors) const;
};

// Rank of an N x L matrix by Gaussian elimination with partial pivoting;
// pivots below tol * max|X| count as zero.
std::size_t matrix_rank(const Matrix& X, double tol = 1e-10);

}  // namespace countmc
