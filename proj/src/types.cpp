#include "countmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>

namespace countmc {

namespace {

std::string msg(const char* fmt, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return std::string(buf);
}

}  // namespace

void CountMatrix::validate() const {
  if (counts.rows() < 1 || counts.cols() < 1)
    throw ConfigError("count matrix must have at least one gene and one sample");
  if (genes.size() != counts.rows())
    throw ConfigError(msg("gene label count %zu does not match row count %zu",
                          genes.size(), counts.rows()));
  if (samples.size() != counts.cols())
    throw ConfigError(msg("sample label count %zu does not match column count %zu",
                          samples.size(), counts.cols()));
  for (std::size_t g = 0; g < counts.rows(); ++g)
    for (std::size_t n = 0; n < counts.cols(); ++n)
      if (counts(g, n) < 0)
        throw ConfigError(msg("negative count at gene %zu, sample %zu", g + 1, n + 1));
}

void PriorConfig::resolve(std::size_t L) {
  if (c.empty()) c.assign(L, 10.0);
  if (s.empty()) s.assign(L, 100.0);
  if (c.size() == 1 && L > 1) c.assign(L, c[0]);
  if (s.size() == 1 && L > 1) s.assign(L, s[0]);
}

void PriorConfig::validate(std::size_t L) const {
  if (!(a > 0.0) || !(b > 0.0) || !(d > 0.0))
    throw ConfigError("prior constants a, b, d must be strictly positive");
  if (c.size() != L || s.size() != L)
    throw ConfigError(msg("prior vectors c and s must have length L=%zu", L));
  for (std::size_t l = 0; l < L; ++l)
    if (!(c[l] > 0.0) || !(s[l] > 0.0))
      throw ConfigError(msg("prior entries c[%zu], s[%zu] must be strictly positive",
                            l + 1, l + 1));
}

void ModelSpec::validate() const {
  if (X.rows() < 1 || X.cols() < 1)
    throw ConfigError("model matrix must have at least one row and one column");
  if (h.size() != X.rows())
    throw ConfigError(msg("offset vector length %zu does not match N=%zu",
                          h.size(), X.rows()));
  for (double v : h)
    if (!std::isfinite(v)) throw ConfigError("offsets must be finite");
  for (double v : X.data())
    if (!std::isfinite(v)) throw ConfigError("model matrix entries must be finite");
  if (matrix_rank(X) < X.cols())
    throw ConfigError("model matrix does not have full column rank");
  priors.validate(X.cols());
}

void ChainState::check(const PriorConfig& priors) const {
  const std::size_t L = theta.size();
  auto finite = [](double v) { return std::isfinite(v); };
  for (double v : eps.data())
    if (!finite(v)) throw ConfigError("non-finite eps in chain state");
  for (double v : gamma)
    if (!(v > 0.0) || !finite(v)) throw ConfigError("gamma must be positive and finite");
  for (double v : beta.data())
    if (!finite(v)) throw ConfigError("non-finite beta in chain state");
  for (double v : theta)
    if (!finite(v)) throw ConfigError("non-finite theta in chain state");
  for (std::size_t l = 0; l < L; ++l) {
    double bound = l < priors.s.size() ? priors.s[l] : 100.0;
    if (!(sigma[l] > 0.0) || !(sigma[l] < bound))
      throw ConfigError(msg("sigma[%zu] outside (0, s)", l + 1));
  }
  if (!(nu > 0.0) || !(nu < priors.d)) throw ConfigError("nu outside (0, d)");
  if (!(tau > 0.0) || !finite(tau)) throw ConfigError("tau must be positive and finite");
}

std::size_t matrix_rank(const Matrix& X, double tol) {
  const std::size_t n = X.rows(), m = X.cols();
  Matrix A = X;
  double maxabs = 0.0;
  for (double v : A.data()) maxabs = std::max(maxabs, std::fabs(v));
  if (maxabs == 0.0) return 0;
  const double thresh = tol * maxabs;

  std::size_t rank = 0;
  for (std::size_t col = 0; col < m && rank < n; ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < n; ++r)
      if (std::fabs(A(r, col)) > std::fabs(A(pivot, col))) pivot = r;
    if (std::fabs(A(pivot, col)) <= thresh) continue;
    if (pivot != rank)
      for (std::size_t c = 0; c < m; ++c) std::swap(A(pivot, c), A(rank, c));
    for (std::size_t r = rank + 1; r < n; ++r) {
      const double f = A(r, col) / A(rank, col);
      for (std::size_t c = col; c < m; ++c) A(r, c) -= f * A(rank, c);
    }
    ++rank;
  }
  return rank;
}

}  // namespace countmc
