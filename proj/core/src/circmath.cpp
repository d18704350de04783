#include "phasync/circmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace phasync {

double wrap_angle(double a) {
  double w = std::fmod(a + M_PI, kTwoPi);
  if (w < 0) w += kTwoPi;
  return w - M_PI;
}

double circular_distance(double a, double b) { return wrap_angle(a - b); }

namespace {

// Series and asymptotic branches meet at x = 30, both accurate to
// better than 1e-10 there.
constexpr double kBesselSeam = 30.0;

double log_i0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return std::log(sum);
}

double log_i0_asymptotic(double x) {
  // I0(x) ~ e^x / sqrt(2 pi x) * sum_k prod_{j<=k}(2j-1)^2 / (k! 8^k x^k)
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= odd * odd / (8.0 * k * x);
    sum += term;
    if (term < 1e-18) break;
  }
  return x - 0.5 * std::log(kTwoPi * x) + std::log(sum);
}

}  // namespace

double log_bessel_i0(double x) {
  if (!std::isfinite(x) || x < 0.0)
    throw std::domain_error("log_bessel_i0: argument must be finite and >= 0");
  if (x == 0.0) return 0.0;
  return x < kBesselSeam ? log_i0_series(x) : log_i0_asymptotic(x);
}

double bessel_i1_over_i0(double x) {
  if (!std::isfinite(x) || x < 0.0)
    throw std::domain_error("bessel_i1_over_i0: argument must be finite and >= 0");
  if (x == 0.0) return 0.0;
  if (x < kBesselSeam) {
    // Ratio of the two power series.
    const double q = 0.25 * x * x;
    double t0 = 1.0, s0 = 1.0;
    double t1 = 0.5 * x, s1 = t1;
    for (int k = 1; k < 200; ++k) {
      t0 *= q / (static_cast<double>(k) * k);
      t1 *= q / (static_cast<double>(k) * (k + 1.0));
      s0 += t0;
      s1 += t1;
      if (t0 < s0 * 1e-18 && t1 < s1 * 1e-18) break;
    }
    return s1 / s0;
  }
  // Asymptotic: I1/I0 = 1 - 1/(2x) - 1/(8x^2) - 1/(8x^3) - ...
  const double ix = 1.0 / x;
  return 1.0 - 0.5 * ix - 0.125 * ix * ix - 0.125 * ix * ix * ix;
}

BivariateTikhonovParam::BivariateTikhonovParam(cplx a, cplx b, double mag3)
    : z1(a), z2(b) {
  z3 = std::polar(std::abs(mag3), std::arg(a) - std::arg(b));
}

double tikhonov_log_pdf(const TikhonovParam& p, WrappedAngle theta) {
  const double r = std::abs(p.z);
  return std::real(p.z * std::polar(1.0, -theta.value())) -
         std::log(kTwoPi) - log_bessel_i0(r);
}

cplx gaussian_smear(cplx z, double var) {
  if (var < 0.0) throw std::domain_error("gaussian_smear: variance must be >= 0");
  return z / (1.0 + std::abs(z) * var);
}

TikhonovParam gauss_to_tikhonov(WrappedAngle mean, double var) {
  if (!(var > 0.0)) throw std::domain_error("gauss_to_tikhonov: variance must be > 0");
  return TikhonovParam{std::polar(1.0 / var, mean.value())};
}

double tikhonov_circular_variance(const TikhonovParam& p) {
  return 1.0 - bessel_i1_over_i0(std::abs(p.z));
}

GridDensity::GridDensity(int dims, int grid_size) : dims_(dims), n_(grid_size) {
  std::size_t total = 1;
  for (int d = 0; d < dims_; ++d) total *= static_cast<std::size_t>(n_);
  probs_.assign(total, 0.0);
}

double& GridDensity::at(std::span<const int> idx) {
  std::size_t flat = 0;
  for (int d = 0; d < dims_; ++d) flat = flat * n_ + idx[d];
  return probs_[flat];
}

double GridDensity::at(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int d = 0; d < dims_; ++d) flat = flat * n_ + idx[d];
  return probs_[flat];
}

void GridDensity::normalize() {
  const double s = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (s > 0.0)
    for (double& p : probs_) p /= s;
}

std::vector<double> GridDensity::marginal(int dim) const {
  std::vector<double> m(n_, 0.0);
  // Stride of `dim` in the row-major flat layout.
  std::size_t stride = 1;
  for (int d = dim + 1; d < dims_; ++d) stride *= n_;
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    const int i = static_cast<int>((flat / stride) % n_);
    m[i] += probs_[flat];
  }
  return m;
}

double GridDensity::circular_mean(int dim) const {
  const auto m = marginal(dim);
  cplx r{0.0, 0.0};
  for (int i = 0; i < n_; ++i) r += m[i] * std::polar(1.0, angle(i));
  return std::arg(r);
}

double GridDensity::resultant_length(int dim) const {
  const auto m = marginal(dim);
  cplx r{0.0, 0.0};
  double total = 0.0;
  for (int i = 0; i < n_; ++i) {
    r += m[i] * std::polar(1.0, angle(i));
    total += m[i];
  }
  return total > 0.0 ? std::abs(r) / total : 0.0;
}

GridDensity grid_phase_posterior(const std::vector<LogFactor>& log_factors,
                                 int dims, int grid_size) {
  if (dims < 1 || dims > 3)
    throw std::invalid_argument("grid_phase_posterior: dims must be in [1, 3]");
  if (grid_size < 64)
    throw std::invalid_argument("grid_phase_posterior: grid_size must be >= 64");

  GridDensity g(dims, grid_size);
  std::vector<double> logp(g.raw().size());
  std::vector<double> angles(dims);
  std::vector<int> idx(dims, 0);
  for (std::size_t flat = 0; flat < logp.size(); ++flat) {
    std::size_t rem = flat;
    for (int d = dims - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(rem % grid_size);
      rem /= grid_size;
    }
    for (int d = 0; d < dims; ++d) angles[d] = g.angle(idx[d]);
    double lp = 0.0;
    for (const auto& f : log_factors) lp += f(angles);
    logp[flat] = lp;
  }
  const double lse = log_sum_exp(logp);
  auto out = g.raw();
  for (std::size_t flat = 0; flat < logp.size(); ++flat)
    out[flat] = std::exp(logp[flat] - lse);
  return g;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], 1e-300));
  }
  return kl;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace phasync
