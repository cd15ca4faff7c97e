#include "countmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace countmc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double clamped_exp(double x, ClampCounter* clamps) {
  if (x > kExpClamp) {
    if (clamps) clamps->bump();
    x = kExpClamp;
  }
  return std::exp(x);
}

std::vector<double> estimate_offsets(const CountMatrix& counts) {
  const std::size_t G = counts.G(), N = counts.N();

  // Geometric means over samples, restricted to genes positive everywhere.
  std::vector<double> loggm;
  std::vector<std::size_t> keep;
  loggm.reserve(G);
  keep.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    bool positive = true;
    double slog = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const long long y = counts.counts(g, n);
      if (y <= 0) {
        positive = false;
        break;
      }
      slog += std::log(static_cast<double>(y));
    }
    if (positive) {
      keep.push_back(g);
      loggm.push_back(slog / static_cast<double>(N));
    }
  }
  if (keep.empty())
    throw NormalizationError(
        "offset estimation needs at least one gene with positive counts in "
        "every sample; supply offsets explicitly instead");

  std::vector<double> h(N);
  std::vector<double> ratios(keep.size());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < keep.size(); ++i)
      ratios[i] = std::log(static_cast<double>(counts.counts(keep[i], n))) -
                  loggm[i];
    std::sort(ratios.begin(), ratios.end());
    const std::size_t k = ratios.size();
    const double med = (k % 2 == 1) ? ratios[k / 2]
                                    : 0.5 * (ratios[k / 2 - 1] + ratios[k / 2]);
    h[n] = med;
  }

  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= static_cast<double>(N);
  for (double& v : h) v -= mean;
  return h;
}

double log_fc_epsilon(long long y, double h, double eta, double gamma,
                      double eps, ClampCounter* clamps) {
  return static_cast<double>(y) * eps - clamped_exp(h + eta + eps, clamps) -
         eps * eps / (2.0 * gamma);
}

std::pair<double, double> gamma_fc_params(double nu, double tau,
                                          const double* eps_row,
                                          std::size_t N) {
  double ss = 0.0;
  for (std::size_t n = 0; n < N; ++n) ss += eps_row[n] * eps_row[n];
  return {(nu + static_cast<double>(N)) / 2.0, (nu * tau + ss) / 2.0};
}

double log_invgamma(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return -(shape + 1.0) * std::log(x) - scale / x;
}

double log_gamma_rate(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - rate * x;
}

double log_fc_nu(double nu, std::size_t G, double tau, double sum_log_gamma,
                 double sum_inv_gamma, double d) {
  if (!(nu > 0.0) || !(nu < d)) return kNegInf;
  const double Gd = static_cast<double>(G);
  return -Gd * std::lgamma(nu / 2.0) + (Gd * nu / 2.0) * std::log(nu * tau / 2.0) -
         (nu / 2.0) * (sum_log_gamma + tau * sum_inv_gamma);
}

std::pair<double, double> tau_fc_params(double a, double b, std::size_t G,
                                        double nu, double sum_inv_gamma) {
  return {a + static_cast<double>(G) * nu / 2.0, b + (nu / 2.0) * sum_inv_gamma};
}

double log_fc_beta(std::size_t ell, double beta_val, const long long* y_row,
                   const std::vector<double>& h, const double* eps_row,
                   const Matrix& X, const double* beta_row, double theta,
                   double sigma, ClampCounter* clamps) {
  const std::size_t N = X.rows(), L = X.cols();
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    double eta = 0.0;
    for (std::size_t l = 0; l < L; ++l)
      eta += X(n, l) * (l == ell ? beta_val : beta_row[l]);
    total += static_cast<double>(y_row[n]) * X(n, ell) * beta_val -
             clamped_exp(h[n] + eps_row[n] + eta, clamps);
  }
  const double z = beta_val - theta;
  return total - z * z / (2.0 * sigma * sigma);
}

std::pair<double, double> theta_fc_params(double sum_beta, std::size_t G,
                                          double sigma, double c) {
  const double v =
      1.0 / (1.0 / (c * c) + static_cast<double>(G) / (sigma * sigma));
  return {v * sum_beta / (sigma * sigma), std::sqrt(v)};
}

double log_fc_sigma(double sigma_val, std::size_t G, double ss,
                    double s_bound) {
  if (!(sigma_val > 0.0) || !(sigma_val < s_bound)) return kNegInf;
  return -static_cast<double>(G) * std::log(sigma_val) -
         ss / (2.0 * sigma_val * sigma_val);
}

}  // namespace countmc
