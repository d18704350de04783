#pragma once

// Circular-statistics numerics: log I0, Tikhonov densities, the
// Gaussian-smearing contraction, and a small brute-force grid
// integrator used as an independent check of the message recursions.

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace phasync {

using cplx = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Wraps an angle to [-pi, pi). Idempotent.
double wrap_angle(double a);

/// Shortest signed distance from b to a on the circle, in [-pi, pi).
double circular_distance(double a, double b);

/// Strong type for an angle kept wrapped to [-pi, pi).
class WrappedAngle {
public:
  WrappedAngle() = default;
  explicit WrappedAngle(double radians) : value_(wrap_angle(radians)) {}
  double value() const { return value_; }

private:
  double value_ = 0.0;
};

/// ln I0(x) for x >= 0. Power series below the seam, asymptotic
/// expansion above; no overflow up to x ~ 1e8 and beyond.
/// Throws std::domain_error for negative or non-finite input.
double log_bessel_i0(double x);

/// I1(x)/I0(x), used to map concentration to circular variance.
double bessel_i1_over_i0(double x);

/// Tikhonov density parameter. Mean direction arg(z), concentration |z|.
/// pdf(theta) = exp(Re[z e^{-j theta}]) / (2 pi I0(|z|)).
struct TikhonovParam {
  cplx z{0.0, 0.0};
};

/// Parameter triple of the cosine-variant bivariate Tikhonov density
///   exp{Re[z1 e^{-j th1} + z2 e^{-j th2} - z3 e^{-j(th1 - th2)}]}.
/// Construction re-aims z3 so that arg(z3) = arg(z1) - arg(z2).
struct BivariateTikhonovParam {
  cplx z1{0.0, 0.0};
  cplx z2{0.0, 0.0};
  cplx z3{0.0, 0.0};

  BivariateTikhonovParam() = default;
  BivariateTikhonovParam(cplx a, cplx b, double mag3);
};

/// Normalized log-density of the Tikhonov distribution at theta.
double tikhonov_log_pdf(const TikhonovParam& p, WrappedAngle theta);

/// Circular convolution of a Tikhonov factor with a wrapped Gaussian of
/// variance var, approximated within the Tikhonov family:
/// z -> z / (1 + |z| var). Exact at var = 0; contraction in |z|.
cplx gaussian_smear(cplx z, double var);

/// Gaussian (mean, var) to Tikhonov: z = e^{j mean} / var.
/// Throws std::domain_error for var <= 0.
TikhonovParam gauss_to_tikhonov(WrappedAngle mean, double var);

/// Circular variance 1 - I1(|z|)/I0(|z|) of a Tikhonov density.
double tikhonov_circular_variance(const TikhonovParam& p);

/// Discretized joint density over a uniform tensor grid on [0, 2pi)^dims.
class GridDensity {
public:
  GridDensity(int dims, int grid_size);

  int dims() const { return dims_; }
  int grid_size() const { return n_; }
  double cell_width() const { return kTwoPi / n_; }

  double& at(std::span<const int> idx);
  double at(std::span<const int> idx) const;
  std::span<const double> raw() const { return probs_; }
  std::span<double> raw() { return probs_; }

  /// Angle of grid cell i along any dimension (cell centers).
  double angle(int i) const { return (i + 0.5) * cell_width(); }

  void normalize();

  /// Marginal over one dimension (sums out the others).
  std::vector<double> marginal(int dim) const;

  /// Circular mean of the marginal along dim.
  double circular_mean(int dim) const;

  /// Circular mean resultant length of the marginal along dim.
  double resultant_length(int dim) const;

private:
  int dims_;
  int n_;
  std::vector<double> probs_;
};

using LogFactor = std::function<double(std::span<const double>)>;

/// Brute-force normalized discrete density over up to 3 angles obtained
/// by evaluating the product of log-factors on a uniform grid.
/// Throws std::invalid_argument for dims outside [1, 3] or grid_size < 64.
GridDensity grid_phase_posterior(const std::vector<LogFactor>& log_factors,
                                 int dims, int grid_size);

/// KL divergence sum p log(p/q) between two pmfs of equal size.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Total variation distance 0.5 sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);

/// log(sum(exp(v))) evaluated stably.
double log_sum_exp(std::span<const double> v);

}  // namespace phasync
