#include "countmc/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace countmc {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> round_once(
    const std::array<std::uint64_t, 4>& ctr,
    const std::array<std::uint64_t, 2>& key) {
  std::uint64_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, ctr[0], hi0, lo0);
  mulhilo(kMul1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round_once(ctr, key);
  }
  return ctr;
}

double RngStream::normal() { return normal_quantile(u01()); }

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma draw requires shape > 0 and rate > 0");
  double boost = 1.0;
  if (shape < 1.0) {
    boost = std::pow(u01(), 1.0 / shape);
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = u01();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      double draw = boost * d * v / rate;
      if (draw < 1e-300) draw = 1e-300;  // keep strictly positive
      return draw;
    }
  }
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int requires n > 0");
  const std::uint64_t reject_below = (0u - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = (*this)();
    if (x >= reject_below) return x % n;
  }
}

// Rational approximations on three regions of p (central, and the two
// tails through sqrt(-2 log p)); coefficients follow Wichura's algorithm
// AS 241 (PPND16 variant).
double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("normal_quantile requires p in (0,1)");

  static const double a[8] = {
      3.3871328727963666080e+00, 1.3314166789178437745e+02,
      1.9715909503065514427e+03, 1.3731693765509461125e+04,
      4.5921953931549871457e+04, 6.7265770927008700853e+04,
      3.3430575583588128105e+04, 2.5090809287301226727e+03};
  static const double b[8] = {
      1.0, 4.2313330701600911252e+01, 6.8718700749205790830e+02,
      5.3941960214247511077e+03, 2.1213794301586595867e+04,
      3.9307895800092710610e+04, 2.8729085735721942674e+04,
      5.2264952788528545610e+03};
  static const double c[8] = {
      1.42343711074968357734e+00, 4.63033784615654529590e+00,
      5.76949722146069140550e+00, 3.64784832476320460504e+00,
      1.27045825245236838258e+00, 2.41780725177450611770e-01,
      2.27238449892691845833e-02, 7.74545014278341407640e-04};
  static const double dd[8] = {
      1.0, 2.05319162663775882187e+00, 1.67638483018380384940e+00,
      6.89767334985100004550e-01, 1.48103976427480074590e-01,
      1.51986665636164571966e-02, 5.47593808499534494600e-04,
      1.05075007164441684324e-09};
  static const double e[8] = {
      6.65790464350110377720e+00, 5.46378491116411436990e+00,
      1.78482653991729133580e+00, 2.96560571828504891230e-01,
      2.65321895265761230930e-02, 1.24266094738807843860e-03,
      2.71155556874348757815e-05, 2.01033439929228813265e-07};
  static const double f[8] = {
      1.0, 5.99832206555887937690e-01, 1.36929880922735805310e-01,
      1.48753612908506148525e-02, 7.86869131145613259100e-04,
      1.84631831751005468180e-05, 1.42151175831644588870e-07,
      2.04426310338993978564e-15};

  auto ratio = [](const double* num, const double* den, double r) {
    double n = num[7], d = den[7];
    for (int i = 6; i >= 0; --i) {
      n = n * r + num[i];
      d = d * r + den[i];
    }
    return n / d;
  };

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * ratio(a, b, r);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    value = ratio(c, dd, r - 1.6);
  } else {
    value = ratio(e, f, r - 5.0);
  }
  return (q < 0.0) ? -value : value;
}

}  // namespace countmc
