#pragma once

#include <atomic>
#include <cstdint>
#include <utility>
#include <vector>

#include "countmc/types.hpp"

namespace countmc {

// Arguments to exp() in likelihood terms are clamped at this value so a
// stray parameter excursion yields a huge finite penalty instead of inf.
constexpr double kExpClamp = 700.0;

// Shared tally of clamp events; totals are scheduling-independent because
// each draw site either clamps or not deterministically.
class ClampCounter {
 public:
  void bump() { events_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t count() const { return events_.load(std::memory_order_relaxed); }
  void reset() { events_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> events_{0};
};

double clamped_exp(double x, ClampCounter* clamps = nullptr);

// Median-of-ratios size factors on the log scale, recentred to sum to zero.
// Throws NormalizationError when no gene is positive in every sample.
std::vector<double> estimate_offsets(const CountMatrix& counts);

// Log full conditional of eps_gn up to an additive constant:
// y*eps - exp(h + eta + eps) - eps^2 / (2 gamma), eta = X_n beta_g.
double log_fc_epsilon(long long y, double h, double eta, double gamma,
                      double eps, ClampCounter* clamps = nullptr);

// Inverse-gamma full-conditional parameters of gamma_g:
// shape (nu+N)/2, scale (nu tau + sum eps^2)/2.
std::pair<double, double> gamma_fc_params(double nu, double tau,
                                          const double* eps_row, std::size_t N);

// Unnormalized log inverse-gamma density, -inf for x <= 0.
double log_invgamma(double x, double shape, double scale);

// Unnormalized log gamma density with rate parameterization, -inf for x <= 0.
double log_gamma_rate(double x, double shape, double rate);

// Log full conditional of nu on (0, d), -inf outside:
// -G lgamma(nu/2) + (G nu / 2) log(nu tau / 2)
//   - (nu/2) (sum_log_gamma + tau * sum_inv_gamma).
double log_fc_nu(double nu, std::size_t G, double tau, double sum_log_gamma,
                 double sum_inv_gamma, double d);

// Gamma full-conditional parameters of tau: shape a + G nu / 2,
// rate b + (nu/2) sum_inv_gamma.
std::pair<double, double> tau_fc_params(double a, double b, std::size_t G,
                                        double nu, double sum_inv_gamma);

// Log full conditional of beta_gl evaluated by direct summation over
// samples; the engine uses an algebraically equivalent cached form.
double log_fc_beta(std::size_t ell, double beta_val, const long long* y_row,
                   const std::vector<double>& h, const double* eps_row,
                   const Matrix& X, const double* beta_row, double theta,
                   double sigma, ClampCounter* clamps = nullptr);

// Normal full-conditional (mean, sd) of theta_l given sum of beta_gl.
std::pair<double, double> theta_fc_params(double sum_beta, std::size_t G,
                                          double sigma, double c);

// Log full conditional of sigma_l on (0, s_bound), -inf outside:
// -G log(sigma) - ss / (2 sigma^2), ss = sum_g (beta_gl - theta_l)^2.
double log_fc_sigma(double sigma_val, std::size_t G, double ss, double s_bound);

}  // namespace countmc
