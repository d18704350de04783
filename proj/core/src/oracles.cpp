#include "phasync/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "phasync/channel.hpp"
#include "phasync/circmath.hpp"
#include "phasync/detectors.hpp"
#include "phasync/smoother.hpp"
#include "phasync/spa.hpp"

namespace phasync {

namespace {

constexpr double kDeg = M_PI / 180.0;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// ---- extended-precision log I0 series ------------------------------------

long double log_i0_series_ld(long double x) {
  const long double q = x * x / 4.0L;
  long double term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 4000; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    if (term < sum * 1e-25L) break;
  }
  return std::log(sum);
}

OracleReport check_i0() {
  OracleReport rep{"i0-accuracy", true, {}};
  double worst_lo = 0.0, worst_hi = 0.0;
  for (double x = 0.0; x <= 30.0; x += 0.01) {
    const long double ref = log_i0_series_ld(x);
    const double got = log_bessel_i0(x);
    const double rel =
        std::abs(got - static_cast<double>(ref)) /
        std::max(static_cast<double>(std::abs(ref)), 1e-300);
    if (x > 0.05) worst_lo = std::max(worst_lo, rel);
  }
  for (double x = 30.0; x <= 200.0; x += 0.25) {
    const long double ref = log_i0_series_ld(x);
    const double got = log_bessel_i0(x);
    const double rel = std::abs(got - static_cast<double>(ref)) /
                       static_cast<double>(std::abs(ref));
    worst_hi = std::max(worst_hi, rel);
  }
  rep.lines.push_back(fmt("series range x<=30: max rel err %.3e (tol 1e-10)", worst_lo));
  rep.lines.push_back(fmt("asymptotic range 30<=x<=200: max rel err %.3e (tol 1e-6)", worst_hi));
  rep.passed = worst_lo <= 1e-10 && worst_hi <= 1e-6;
  return rep;
}

// ---- Tikhonov normalization ----------------------------------------------

OracleReport check_tikhonov_norm() {
  OracleReport rep{"tikhonov-norm", true, {}};
  const int n = 4096;
  const double h = kTwoPi / n;
  double worst = 0.0;
  for (cplx z : {cplx{0.0, 0.0}, cplx{1.0, 0.0}, std::polar(5.0, 1.0),
                 std::polar(20.0, -2.0), cplx{200.0, 0.0}}) {
    double integral = 0.0;
    for (int i = 0; i < n; ++i)
      integral += std::exp(tikhonov_log_pdf({z}, WrappedAngle(i * h))) * h;
    worst = std::max(worst, std::abs(integral - 1.0));
  }
  rep.lines.push_back(fmt("max |integral - 1| = %.3e (tol 1e-9)", worst));
  rep.passed = worst <= 1e-9;
  return rep;
}

// ---- smear vs circular convolution ---------------------------------------

double fit_concentration(double resultant) {
  double lo = 0.0, hi = 1e6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bessel_i1_over_i0(mid) < resultant)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

OracleReport check_smear() {
  OracleReport rep{"smear-vs-grid", true, {}};
  const int n = 4096;
  const double h = kTwoPi / n;
  const double var = (4.0 * kDeg) * (4.0 * kDeg);
  double worst_rel = 0.0, worst_phase = 0.0;
  for (double mag : {2.0, 5.0, 10.0, 20.0}) {
    const cplx z = std::polar(mag, M_PI / 4.0);
    std::vector<double> tik(n), conv(n, 0.0), wg(n, 0.0);
    for (int i = 0; i < n; ++i)
      tik[i] = std::exp(tikhonov_log_pdf({z}, WrappedAngle(i * h)));
    for (int i = 0; i < n; ++i) {
      const double a = wrap_angle(i * h);
      for (int w = -2; w <= 2; ++w)
        wg[i] += std::exp(-0.5 * (a + kTwoPi * w) * (a + kTwoPi * w) / var);
    }
    double wsum = std::accumulate(wg.begin(), wg.end(), 0.0);
    for (double& v : wg) v /= wsum;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) conv[(i + j) % n] += tik[i] * h * wg[j];
    cplx mean{0.0, 0.0};
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      mean += conv[i] * std::polar(1.0, i * h);
      total += conv[i];
    }
    mean /= total;
    const double kappa_grid = fit_concentration(std::abs(mean));
    const cplx smeared = gaussian_smear(z, var);
    worst_rel = std::max(
        worst_rel, std::abs(std::abs(smeared) - kappa_grid) / kappa_grid);
    worst_phase = std::max(
        worst_phase, std::abs(circular_distance(std::arg(mean), std::arg(z))));
  }
  rep.lines.push_back(fmt("max concentration rel diff %.3e (tol 5e-2)", worst_rel));
  rep.lines.push_back(fmt("max phase shift %.3e rad (tol 1e-3)", worst_phase));
  rep.passed = worst_rel <= 0.05 && worst_phase <= 1e-3;
  return rep;
}

// ---- SPA forward message vs 128^3 grid filter ----------------------------

// Separable 1-D circular convolution with a truncated Gaussian kernel.
void convolve_axis(std::vector<double>& p, int n, int stride_axis,
                   int outer, int inner, const std::vector<double>& taps) {
  const int W = (static_cast<int>(taps.size()) - 1) / 2;
  std::vector<double> line(n);
  for (int o = 0; o < outer; ++o)
    for (int in = 0; in < inner; ++in) {
      double* base = p.data() + static_cast<std::size_t>(o) * n * inner + in;
      for (int i = 0; i < n; ++i) line[i] = base[static_cast<std::size_t>(i) * stride_axis];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int d = -W; d <= W; ++d)
          acc += taps[d + W] * line[((i + d) % n + n) % n];
        base[static_cast<std::size_t>(i) * stride_axis] = acc;
      }
    }
}

std::vector<double> gaussian_taps(double sigma, double h) {
  const int W = std::max(3, static_cast<int>(std::ceil(6.0 * sigma / h)));
  std::vector<double> taps(2 * W + 1);
  double sum = 0.0;
  for (int d = -W; d <= W; ++d) {
    taps[d + W] = std::exp(-0.5 * (d * h) * (d * h) / (sigma * sigma));
    sum += taps[d + W];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

OracleReport check_spa_grid(int n_frames = 50) {
  OracleReport rep{"spa-vs-grid", true, {}};
  const int n = 128;
  const double h = kTwoPi / n;
  const int L = 5;
  const double s2 = (4.0 * kDeg) * (4.0 * kDeg);
  const double n0 = std::pow(10.0, -1.0);  // E_s/N_0 = 10 dB, unit energy
  const Constellation c = Constellation::qpsk();
  const PilotPattern pattern = PilotPattern::all_pilots();

  double worst_kl = 0.0, worst_mean = 0.0;
  for (int f = 0; f < n_frames; ++f) {
    Rng rng(0xa5a5a5a5ull + f);
    const Frame frame = build_frame({}, c, pattern, L, 2);
    const PhaseTrajectory traj = sample_phase_trajectories(L, 2, 1, s2, s2, rng);
    const std::vector<cplx> gains = unit_gains(2, 1);
    const ReceivedFrame rx = apply_channel(frame, traj, gains, n0, rng);

    // SPA forward recursion over the first L-1 samples, then fold in
    // the last sample's factor.
    const std::vector<SymbolPrior> priors = frame_priors(frame, false);
    TikhonovMessageState st = TikhonovMessageState::zero(2, 1);
    for (int k = 0; k + 1 < L; ++k) {
      const PriorMoments mm = prior_moments(priors[k], c, rx.gains, 1, n0);
      const PriorMoments mm_next =
          prior_moments(priors[k + 1], c, rx.gains, 1, n0);
      st = forward_step(st, k, rx, mm, s2, s2, &mm_next, k + 1);
    }
    const cplx e0 = rx.gain(0, 0) * frame.symbol(L - 1, 0);
    const cplx e1 = rx.gain(1, 0) * frame.symbol(L - 1, 1);
    const cplx z0 = st.link(0, 0) + (2.0 / n0) * rx.sample(L - 1, 0) * std::conj(e0);
    const cplx z1 = st.link(1, 0) + (2.0 / n0) * rx.sample(L - 1, 0) * std::conj(e1);
    const cplx z3 = st.cross(0, 1) + (2.0 / n0) * e1 * std::conj(e0);

    // Implied joint density over the two link phases on the shifted
    // grid phi_t = (t+1) h (sums of two cell centers land there).
    std::vector<double> lq(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double p0 = (i + 1) * h, p1 = (j + 1) * h;
        lq[static_cast<std::size_t>(i) * n + j] =
            std::real(z0 * std::polar(1.0, -p0)) +
            std::real(z1 * std::polar(1.0, -p1)) -
            std::real(z3 * std::polar(1.0, -(p0 - p1)));
      }
    const double mx = *std::max_element(lq.begin(), lq.end());
    std::vector<double> m0(n, 0.0), m1(n, 0.0);
    double qsum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double v = std::exp(lq[static_cast<std::size_t>(i) * n + j] - mx);
        m0[i] += v;
        m1[j] += v;
        qsum += v;
      }
    for (int i = 0; i < n; ++i) { m0[i] /= qsum; m1[i] /= qsum; }

    // Exact grid filter over the three oscillator phases.
    std::vector<double> p(static_cast<std::size_t>(n) * n * n, 1.0);
    const std::vector<double> taps = gaussian_taps(std::sqrt(s2), h);
    std::vector<cplx> u0(n), u1(n), wr(n);
    for (int k = 0; k < L; ++k) {
      const cplx g0 = rx.gain(0, 0) * frame.symbol(k, 0);
      const cplx g1 = rx.gain(1, 0) * frame.symbol(k, 1);
      for (int i = 0; i < n; ++i) {
        const double a = (i + 0.5) * h;
        u0[i] = g0 * std::polar(1.0, a);
        u1[i] = g1 * std::polar(1.0, a);
        wr[i] = std::polar(1.0, a);
      }
      const cplx r = rx.sample(k, 0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const cplx s = u0[i] + u1[j];
          const double base = std::norm(r) + std::norm(s);
          double* row = p.data() + (static_cast<std::size_t>(i) * n + j) * n;
          for (int l = 0; l < n; ++l) {
            const double d2 = base - 2.0 * std::real(std::conj(r) * s * wr[l]);
            row[l] *= std::exp(-d2 / n0);
          }
        }
      double total = std::accumulate(p.begin(), p.end(), 0.0);
      for (double& v : p) v /= total;
      if (k + 1 < L) {
        convolve_axis(p, n, n * n, 1, n * n, taps);            // theta_t1
        convolve_axis(p, n, n, n, n, taps);                    // theta_t2
        convolve_axis(p, n, 1, n * n, 1, taps);                // theta_r
      }
    }
    std::vector<double> g0m(n, 0.0), g1m(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double* row = p.data() + (static_cast<std::size_t>(i) * n + j) * n;
        for (int l = 0; l < n; ++l) {
          g0m[(i + l) % n] += row[l];
          g1m[(j + l) % n] += row[l];
        }
      }

    auto circ_mean = [&](const std::vector<double>& d) {
      cplx acc{0.0, 0.0};
      for (int t = 0; t < n; ++t) acc += d[t] * std::polar(1.0, (t + 1) * h);
      return std::arg(acc);
    };
    worst_kl = std::max({worst_kl, kl_divergence(g0m, m0), kl_divergence(g1m, m1)});
    worst_mean = std::max(
        {worst_mean,
         std::abs(circular_distance(circ_mean(g0m), circ_mean(m0))),
         std::abs(circular_distance(circ_mean(g1m), circ_mean(m1)))});
  }
  rep.lines.push_back(fmt("frames %.0f: max marginal KL %.4f (tol 0.05)",
                          static_cast<double>(n_frames), worst_kl));
  rep.lines.push_back(
      fmt("max circular-mean error %.4f deg (tol 0.5)", worst_mean / kDeg));
  rep.passed = worst_kl <= 0.05 && worst_mean <= 0.5 * kDeg;
  return rep;
}

// ---- Gauss-MAP belief vs grid integration --------------------------------

OracleReport check_gaussmap_grid(int n_draws = 100) {
  OracleReport rep{"gaussmap-vs-grid", true, {}};
  const int n = 128;
  const double h = kTwoPi / n;
  const Constellation c = Constellation::qpsk();
  double worst_tv = 0.0;
  std::mt19937_64 rng(0xbeefcafeull);
  std::uniform_real_distribution<double> uang(0.0, kTwoPi);
  std::uniform_real_distribution<double> ustd(1.0 * kDeg, 6.0 * kDeg);
  std::uniform_real_distribution<double> urho(-0.9, 0.0);
  std::uniform_real_distribution<double> uebn0(4.0, 16.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int d = 0; d < n_draws; ++d) {
    // Unit-energy QPSK: Es = 1 over 2 bits, so N0 = 1/(2 Eb/N0).
    const double n0 = 1.0 / (2.0 * std::pow(10.0, uebn0(rng) / 10.0));
    Eigen::Matrix2d P;
    const double s1 = ustd(rng), s2 = ustd(rng), rho = urho(rng);
    P << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
    const double th0 = uang(rng), th1 = uang(rng);

    // Sample truth near the posterior and synthesize the observation.
    const Eigen::LLT<Eigen::Matrix2d> llt(P);
    Eigen::Vector2d eps(gauss(rng), gauss(rng));
    const Eigen::Vector2d theta =
        Eigen::Vector2d(th0, th1) + llt.matrixL() * eps;
    std::uniform_int_distribution<int> sym(0, c.size() - 1);
    const cplx c0 = c.points[sym(rng)], c1 = c.points[sym(rng)];
    const cplx noise{gauss(rng) * std::sqrt(n0 / 2), gauss(rng) * std::sqrt(n0 / 2)};
    const cplx r = c0 * std::polar(1.0, theta[0]) + c1 * std::polar(1.0, theta[1]) + noise;

    ReceivedFrame rx;
    rx.L = 1; rx.n_rx = 1; rx.n_tx = 2;
    rx.r = {r};
    rx.gains = unit_gains(2, 1);
    rx.n0 = n0;
    PhasePosterior post;
    post.L = 1; post.n_tx = 2; post.n_rx = 1;
    post.theta_hat = {th0, th1};
    post.cov = {P};
    const SymbolPrior prior = SymbolPrior::uniform(2, c.size());
    const JointSymbolBelief b = gauss_map_belief(rx, 0, post, c, prior);

    // Grid integration of the likelihood against the Gaussian posterior.
    const Eigen::Matrix2d Pinv = P.inverse();
    std::vector<double> ref(b.candidate_count(), 0.0);
    std::vector<double> lw(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Eigen::Vector2d dd(circular_distance((i + 0.5) * h, th0),
                                 circular_distance((j + 0.5) * h, th1));
        lw[static_cast<std::size_t>(i) * n + j] = -0.5 * dd.dot(Pinv * dd);
      }
    for (int cand = 0; cand < b.candidate_count(); ++cand) {
      const cplx s0 = c.points[b.symbol_index(cand, 0)];
      const cplx s1c = c.points[b.symbol_index(cand, 1)];
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const cplx e0 = s0 * std::polar(1.0, (i + 0.5) * h);
        for (int j = 0; j < n; ++j) {
          const cplx pred = e0 + s1c * std::polar(1.0, (j + 0.5) * h);
          acc += std::exp(lw[static_cast<std::size_t>(i) * n + j] -
                          std::norm(r - pred) / n0);
        }
      }
      ref[cand] = acc;
    }
    const double total = std::accumulate(ref.begin(), ref.end(), 0.0);
    for (double& v : ref) v /= total;
    std::vector<double> got(b.candidate_count());
    for (int cand = 0; cand < b.candidate_count(); ++cand)
      got[cand] = std::exp(b.log_pmf[cand]);
    worst_tv = std::max(worst_tv, total_variation(ref, got));
  }
  rep.lines.push_back(fmt("draws %.0f: max total variation %.4f (tol 2e-2)",
                          static_cast<double>(n_draws), worst_tv));
  rep.passed = worst_tv <= 2e-2;
  return rep;
}

// ---- VB exponent vs Gauss-Hermite quadrature -----------------------------

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int k = 0; k < n; ++k) {
    nodes[k] = es.eigenvalues()[k];
    const double v0 = es.eigenvectors()(0, k);
    weights[k] = sqrt_pi * v0 * v0;
  }
}

OracleReport check_vb_quadrature(int n_draws = 100) {
  OracleReport rep{"vb-vs-quadrature", true, {}};
  const Constellation c = Constellation::qpsk();
  const double n0 = 0.1;
  std::vector<double> nodes, weights;
  gauss_hermite(64, nodes, weights);
  std::mt19937_64 rng(0x600df00dull);
  std::uniform_real_distribution<double> uang(0.0, kTwoPi);
  std::uniform_real_distribution<double> ustd(0.5 * kDeg, 6.0 * kDeg);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double worst = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    const double th = uang(rng);
    const double sd = ustd(rng);
    std::uniform_int_distribution<int> sym(0, c.size() - 1);
    const cplx cs = c.points[sym(rng)];
    const cplx noise{gauss(rng) * std::sqrt(n0 / 2), gauss(rng) * std::sqrt(n0 / 2)};
    const cplx r = cs * std::polar(1.0, th + sd * gauss(rng)) + noise;

    ReceivedFrame rx;
    rx.L = 1; rx.n_rx = 1; rx.n_tx = 1;
    rx.r = {r};
    rx.gains = unit_gains(1, 1);
    rx.n0 = n0;
    PhasePosterior post;
    post.L = 1; post.n_tx = 1; post.n_rx = 1;
    post.theta_hat = {th};
    post.cov = {Eigen::MatrixXd::Constant(1, 1, sd * sd)};
    const SymbolPrior prior = SymbolPrior::uniform(1, c.size());
    const JointSymbolBelief b = vb_belief(rx, 0, post, c, prior);

    std::vector<double> lq(c.size());
    for (int s = 0; s < c.size(); ++s) {
      double acc = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double theta = th + std::sqrt(2.0) * sd * nodes[q];
        acc += weights[q] / std::sqrt(M_PI) *
               (-std::norm(r - c.points[s] * std::polar(1.0, theta)) / n0);
      }
      lq[s] = acc;
    }
    const double lse_q = log_sum_exp(lq);
    for (int s = 0; s < c.size(); ++s)
      worst = std::max(worst, std::abs((lq[s] - lse_q) - b.log_pmf[s]));
  }
  rep.lines.push_back(
      fmt("draws %.0f: max |log-pmf diff| %.3e (tol 1e-3)",
          static_cast<double>(n_draws), worst));
  rep.passed = worst <= 1e-3;
  return rep;
}

// ---- EKS vs closed-form scalar Kalman/RTS --------------------------------

OracleReport check_eks_kalman() {
  OracleReport rep{"eks-vs-kalman", true, {}};
  const int L = 40, preamble = 10;
  const double q = 1e-6, n0 = 1e-4;
  std::mt19937_64 rng(0x0dddba11ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> phi(L);
  phi[0] = 0.3;
  for (int k = 1; k < L; ++k) phi[k] = phi[k - 1] + std::sqrt(q) * gauss(rng);

  ReceivedFrame rx;
  rx.L = L; rx.n_rx = 1; rx.n_tx = 1;
  rx.gains = unit_gains(1, 1);
  rx.n0 = n0;
  rx.r.resize(L);
  for (int k = 0; k < L; ++k)
    rx.r[k] = std::polar(1.0, phi[k]) +
              cplx{gauss(rng) * std::sqrt(n0 / 2), gauss(rng) * std::sqrt(n0 / 2)};

  std::vector<SoftSymbol> soft(L, SoftSymbol{cplx{1.0, 0.0}, 0.0});
  std::vector<uint8_t> mask(L, 0);
  for (int k = 0; k < preamble; ++k) mask[k] = 1;
  SmootherParams sp{q, 0.0, false};
  const PhasePosterior post = smooth_phases(rx, soft, sp, mask);

  // Scalar reference mirroring the rotated-measurement linearization.
  cplx corr{0.0, 0.0};
  for (int k = 0; k < preamble; ++k) corr += rx.r[k];
  double x = std::arg(corr), P = n0 / (2.0 * preamble);
  std::vector<double> xf(L), pf(L);
  for (int k = 0; k < L; ++k) {
    if (k > 0) P += q;
    const double K = P / (P + n0 / 2.0);
    x += K * std::imag(rx.r[k] * std::polar(1.0, -x));
    P *= (1.0 - K);
    xf[k] = x;
    pf[k] = P;
  }
  std::vector<double> xs(L), ps(L);
  xs[L - 1] = xf[L - 1];
  ps[L - 1] = pf[L - 1];
  for (int k = L - 2; k >= 0; --k) {
    const double Pp = pf[k] + q;
    const double G = pf[k] / Pp;
    xs[k] = xf[k] + G * (xs[k + 1] - xf[k]);
    ps[k] = pf[k] + G * G * (ps[k + 1] - Pp);
  }
  double worst_x = 0.0, worst_p = 0.0;
  for (int k = 0; k < L; ++k) {
    worst_x = std::max(worst_x, std::abs(post.theta(k, 0, 0) - xs[k]));
    worst_p = std::max(worst_p, std::abs(post.P(k, 0)(0, 0) - ps[k]));
  }
  rep.lines.push_back(fmt("max |theta diff| %.3e (tol 1e-8)", worst_x));
  rep.lines.push_back(fmt("max |cov diff| %.3e (tol 1e-8)", worst_p));
  rep.passed = worst_x <= 1e-8 && worst_p <= 1e-8;
  return rep;
}

// ---- u-tilde solver residuals --------------------------------------------

OracleReport check_utilde() {
  OracleReport rep{"utilde-residual", true, {}};
  std::mt19937_64 rng(0x7e57ab1eull);
  std::uniform_real_distribution<double> ud(1e-3, 0.1);
  std::uniform_real_distribution<double> urho(-0.999, 0.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double p11 = ud(rng), p22 = ud(rng);
    const double p12 = urho(rng) * std::sqrt(p11 * p22);
    const UtildeSolve sol = solve_u_tilde(p11, p22, p12);
    const double back =
        -sol.value / std::sqrt((1.0 / p11 - sol.value) * (1.0 / p22 - sol.value));
    worst = std::max(worst, std::abs(back - p12));
  }
  const UtildeSolve sym = solve_u_tilde(0.1, 0.1, -0.05);
  const double sym_err = std::abs(sym.value - 0.476190476190476);
  rep.lines.push_back(fmt("10^4 draws: max back-substitution residual %.3e (tol 1e-9)", worst));
  rep.lines.push_back(fmt("symmetric closed form |u - 10/21| = %.3e (tol 1e-9)", sym_err));
  rep.passed = worst <= 1e-9 && sym_err <= 1e-9;
  return rep;
}

}  // namespace

const std::vector<std::string>& oracle_names() {
  static const std::vector<std::string> names = {
      "tikhonov-norm", "smear-vs-grid",    "spa-vs-grid",  "gaussmap-vs-grid",
      "vb-vs-quadrature", "eks-vs-kalman", "i0-accuracy",  "utilde-residual"};
  return names;
}

OracleReport run_oracle(const std::string& name) {
  if (name == "tikhonov-norm") return check_tikhonov_norm();
  if (name == "smear-vs-grid") return check_smear();
  if (name == "spa-vs-grid") return check_spa_grid();
  if (name == "gaussmap-vs-grid") return check_gaussmap_grid();
  if (name == "vb-vs-quadrature") return check_vb_quadrature();
  if (name == "eks-vs-kalman") return check_eks_kalman();
  if (name == "i0-accuracy") return check_i0();
  if (name == "utilde-residual") return check_utilde();
  throw std::invalid_argument("unknown oracle: " + name);
}

}  // namespace phasync
