#include "phasync/spa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace phasync {

SymbolPrior SymbolPrior::uniform(int n_tx, int m) {
  SymbolPrior p;
  p.n_tx = n_tx;
  p.m = m;
  p.pmf.assign(static_cast<std::size_t>(n_tx) * m, 1.0 / m);
  return p;
}

SymbolPrior SymbolPrior::delta(int n_tx, int m, const std::vector<int>& sym_idx) {
  SymbolPrior p;
  p.n_tx = n_tx;
  p.m = m;
  p.pmf.assign(static_cast<std::size_t>(n_tx) * m, 0.0);
  for (int ant = 0; ant < n_tx; ++ant) p.at(ant, sym_idx[ant]) = 1.0;
  return p;
}

int JointSymbolBelief::symbol_index(int candidate, int ant) const {
  int v = candidate;
  for (int i = 0; i < ant; ++i) v /= m;
  return v % m;
}

int JointSymbolBelief::hard_decision() const {
  int best = 0;
  for (int j = 1; j < candidate_count(); ++j)
    if (log_pmf[j] > log_pmf[best]) best = j;
  return best;
}

void JointSymbolBelief::normalize_and_cache() {
  const double lse = log_sum_exp(log_pmf);
  for (double& lp : log_pmf) lp -= lse;
  marginals.assign(static_cast<std::size_t>(n_tx) * m, 0.0);
  for (int j = 0; j < candidate_count(); ++j) {
    const double p = std::exp(log_pmf[j]);
    for (int ant = 0; ant < n_tx; ++ant)
      marginals[static_cast<std::size_t>(ant) * m + symbol_index(j, ant)] += p;
  }
}

PriorMoments prior_moments(const SymbolPrior& prior, const Constellation& c,
                           const std::vector<cplx>& gains, int n_rx, double n0) {
  PriorMoments mm;
  const int n_tx = prior.n_tx;
  mm.alpha.resize(n_tx);
  mm.beta.resize(n_tx);
  mm.gamma.assign(n_rx, n0);
  for (int ant = 0; ant < n_tx; ++ant) {
    cplx a{0.0, 0.0};
    double b = 0.0;
    for (int s = 0; s < prior.m; ++s) {
      a += prior.at(ant, s) * c.points[s];
      b += prior.at(ant, s) * std::norm(c.points[s]);
    }
    mm.alpha[ant] = a;
    mm.beta[ant] = b;
  }
  for (int n = 0; n < n_rx; ++n)
    for (int ant = 0; ant < n_tx; ++ant) {
      const double g2 = std::norm(gains[static_cast<std::size_t>(ant) * n_rx + n]);
      mm.gamma[n] += g2 * (mm.beta[ant] - std::norm(mm.alpha[ant]));
    }
  return mm;
}

BivariateTikhonovParam pd_params(cplx r, const PriorMoments& moments) {
  if (moments.alpha.size() != 2)
    throw std::invalid_argument("pd_params: 2x1 form requires two antennas");
  const double gamma = moments.gamma.at(0);
  if (!(gamma > 0.0)) throw std::invalid_argument("pd_params: gamma must be > 0");
  const cplx a1 = moments.alpha[0];
  const cplx a2 = moments.alpha[1];
  const cplx x1 = (2.0 / gamma) * r * std::conj(a1);
  const cplx x2 = (2.0 / gamma) * r * std::conj(a2);
  BivariateTikhonovParam p;
  p.z1 = x1;
  p.z2 = x2;
  // arg(x3) = arg(r a1*) - arg(r a2*) by construction; zero when either
  // alpha vanishes (uniform direction).
  if (std::abs(a1) > 0.0 && std::abs(a2) > 0.0)
    p.z3 = std::polar((2.0 / gamma) * std::abs(a2 * std::conj(a1)),
                      std::arg(x1) - std::arg(x2));
  return p;
}

namespace {

// ---- Exact smear for a single transmit pair ------------------------------
//
// The pair message exp{Re[z0 e^{-j p0} + z1 e^{-j p1} - z3 e^{-j(p0-p1)}]}
// convolved with the correlated Gaussian link increments damps the first
// circular moments of p0, p1 and of the difference psi = p0 - p1 by
// exactly exp(-var/2) each. The three marginals reduce to 1-D densities
// (the companion coordinate integrates to an I0 factor), so the moments
// are cheap quadratures; the smeared parameters are recovered by a
// damped Newton solve on the moment map.

// Integrates a weight callback against exp{g} on the circle. The
// density may carry several well-separated sharp modes (constellation
// ambiguities), so a coarse scan locates every local maximum within 30
// log-units of the peak, each gets a curvature-adapted window,
// overlapping windows are merged, and the segments are integrated by
// the midpoint rule with a step resolving the sharpest mode. The
// callback accumulates its statistics scaled by the density weight;
// the returned peak log-value restores absolute normalization.
template <class F, class Accum>
double integrate_circle(F&& g, Accum&& accum) {
  const int nc = 128;
  const double hc = kTwoPi / nc;
  std::array<double, nc> v;
  double gmax = -1e300;
  for (int i = 0; i < nc; ++i) {
    v[i] = g(i * hc);
    gmax = std::max(gmax, v[i]);
  }

  // Local maxima worth keeping, with refined position and curvature.
  // Modes more than 15 log-units down weigh < 1e-6 of the peak and are
  // left to the coarse grid.
  std::vector<std::pair<double, double>> windows;  // (lo, hi), may wrap
  double c2max = 4.0;
  for (int i = 0; i < nc; ++i) {
    const double prev = v[(i + nc - 1) % nc], next = v[(i + 1) % nc];
    if (!(v[i] >= prev && v[i] > next && v[i] > gmax - 15.0)) continue;
    double mu = i * hc, step = hc;
    for (int it = 0; it < 12 && step > 1e-9; ++it) {
      const double gm = g(mu - step), g0 = g(mu), gp = g(mu + step);
      const double den = gm - 2.0 * g0 + gp;
      double shift = 0.0;
      if (den < 0.0) shift = 0.5 * (gm - gp) / den;
      shift = std::clamp(shift, -1.0, 1.0);
      mu += shift * step;
      step *= 0.5;
    }
    double d = 0.05;
    double c2 = -(g(mu + d) - 2.0 * g(mu) + g(mu - d)) / (d * d);
    if (c2 > 100.0) {
      d = 0.7 / std::sqrt(c2);
      c2 = -(g(mu + d) - 2.0 * g(mu) + g(mu - d)) / (d * d);
    }
    c2max = std::max(c2max, c2);
    const double w = std::min(M_PI, 10.0 / std::sqrt(std::max(c2, 4.0)));
    windows.emplace_back(mu - w, mu + w);
  }
  if (windows.empty()) windows.emplace_back(-M_PI, M_PI);

  // Merge overlapping windows on the line after sorting by start; a
  // full-circle cover collapses to one segment.
  std::sort(windows.begin(), windows.end());
  std::vector<std::pair<double, double>> segs;
  for (const auto& win : windows) {
    if (!segs.empty() && win.first <= segs.back().second)
      segs.back().second = std::max(segs.back().second, win.second);
    else
      segs.push_back(win);
  }
  // Wrap-around overlap between the last and first segment.
  if (segs.size() > 1 && segs.back().second - kTwoPi >= segs.front().first) {
    segs.front().first = segs.back().first - kTwoPi;
    segs.pop_back();
  }
  double total_len = 0.0;
  for (auto& s : segs) {
    s.second = std::min(s.second, s.first + kTwoPi);
    total_len += s.second - s.first;
  }
  if (total_len >= kTwoPi) {
    segs.assign(1, {segs.front().first, segs.front().first + kTwoPi});
  }

  const double res = 4.0 * std::sqrt(c2max);  // points per radian
  for (const auto& s : segs) {
    const double len = s.second - s.first;
    const int n = std::clamp(static_cast<int>(std::ceil(len * res)), 64, 4096);
    const double h = len / n;
    for (int i = 0; i < n; ++i) {
      const double phi = s.first + (i + 0.5) * h;
      accum(phi, std::exp(g(phi) - gmax) * h);
    }
  }
  return gmax;
}

// First circular moments of the pair density's three 1-D marginals
// (each reduces to a 1-D quadrature: the companion coordinate
// integrates to a Bessel factor), plus the log partition value from
// the difference-marginal pass (up to a constant shared by every
// parameter set, which is all the mixture weights below need).
struct PairFirst {
  cplx m0, m1, mp;  // first harmonics of p0, p1, psi = p0 - p1
  double logz = -1e300;
};

PairFirst pair_first(cplx z0, cplx z1, cplx z3) {
  PairFirst st{};
  {
    cplx n1{0, 0};
    double den = 0.0;
    integrate_circle(
        [&](double p) {
          return std::real(z0 * std::polar(1.0, -p)) +
                 log_bessel_i0(std::abs(z1 - std::conj(z3) * std::polar(1.0, p)));
        },
        [&](double p, double w) {
          n1 += w * std::polar(1.0, p);
          den += w;
        });
    if (den > 0.0) st.m0 = n1 / den;
  }
  {
    cplx n1{0, 0};
    double den = 0.0;
    integrate_circle(
        [&](double p) {
          return std::real(z1 * std::polar(1.0, -p)) +
                 log_bessel_i0(std::abs(z0 - z3 * std::polar(1.0, p)));
        },
        [&](double p, double w) {
          n1 += w * std::polar(1.0, p);
          den += w;
        });
    if (den > 0.0) st.m1 = n1 / den;
  }
  {
    cplx n1{0, 0};
    double den = 0.0;
    const double gmax = integrate_circle(
        [&](double p) {
          return -std::real(z3 * std::polar(1.0, -p)) +
                 log_bessel_i0(std::abs(z0 * std::polar(1.0, -p) + z1));
        },
        [&](double p, double w) {
          n1 += w * std::polar(1.0, p);
          den += w;
        });
    if (den > 0.0) {
      st.mp = n1 / den;
      st.logz = gmax + std::log(den);
    }
  }
  return st;
}

// Fits family parameters to target first moments by damped Newton.
// `tilt` is added to the candidate parameters before evaluating the
// moment map (fitting the product with a fixed family factor); the
// seed is kept on failure.
void fit_pair_to_moments(cplx& z0, cplx& z1, cplx& z3, cplx t0, cplx t1,
                         cplx tp, cplx u0, cplx u1, cplx u3) {
  Eigen::VectorXd target(6);
  target << t0.real(), t0.imag(), t1.real(), t1.imag(), tp.real(), tp.imag();
  Eigen::VectorXd x(6);
  x << z0.real(), z0.imag(), z1.real(), z1.imag(), z3.real(), z3.imag();
  auto residual = [&](const Eigen::VectorXd& v) {
    const PairFirst m = pair_first(cplx{v[0], v[1]} + u0, cplx{v[2], v[3]} + u1,
                                   cplx{v[4], v[5]} + u3);
    Eigen::VectorXd r(6);
    r << m.m0.real(), m.m0.imag(), m.m1.real(), m.m1.imag(), m.mp.real(),
        m.mp.imag();
    return Eigen::VectorXd(r - target);
  };
  Eigen::VectorXd f = residual(x);
  for (int it = 0; it < 12 && f.lpNorm<Eigen::Infinity>() > 1e-9; ++it) {
    Eigen::MatrixXd jac(6, 6);
    for (int c = 0; c < 6; ++c) {
      Eigen::VectorXd xp = x;
      const double h = 1e-4 * (1.0 + std::abs(x[c]));
      xp[c] += h;
      jac.col(c) = (residual(xp) - f) / h;
    }
    const Eigen::VectorXd step = jac.fullPivLu().solve(-f);
    if (!step.allFinite()) break;
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 6; ++half) {
      const Eigen::VectorXd xn = x + scale * step;
      const Eigen::VectorXd fn = residual(xn);
      if (fn.norm() < f.norm()) {
        x = xn; f = fn; accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  if (f.allFinite() && f.lpNorm<Eigen::Infinity>() < 1e-3) {
    z0 = {x[0], x[1]};
    z1 = {x[2], x[3]};
    z3 = {x[4], x[5]};
  }
}

// Smears (z0, z1, z3) through link-increment variances (q_link on each
// phase, q_psi on the pair difference). Every first circular moment of
// the convolved density is the incoming moment damped by exp(-var/2)
// with the variance of the matching increment combination, so the
// damped moments are exact targets; a damped Newton solve recovers the
// family parameters (the information projection onto the family). The
// scalar-damped parameters seed the solve and serve as the fallback.
void smear_pair(cplx& z0, cplx& z1, cplx& z3, double q_link, double q_psi) {
  const PairFirst cur = pair_first(z0, z1, z3);
  const double d_link = std::exp(-0.5 * q_link);
  const double d_psi = std::exp(-0.5 * q_psi);
  const cplx s0 = gaussian_smear(z0, q_link);
  const cplx s1 = gaussian_smear(z1, q_link);
  const cplx s3 = gaussian_smear(z3, q_psi);
  z0 = s0; z1 = s1; z3 = s3;
  if (std::abs(cur.m0) + std::abs(cur.m1) + std::abs(cur.mp) < 1e-12) return;
  fit_pair_to_moments(z0, z1, z3, d_link * cur.m0, d_link * cur.m1,
                      d_psi * cur.mp, {0, 0}, {0, 0}, {0, 0});
}

// Gauss-Hermite abscissas/weights (physicists' convention, 5 points).
constexpr std::array<double, 5> kGhX = {-2.0201828704560856, -0.9585724646138185,
                                        0.0, 0.9585724646138185,
                                        2.0201828704560856};
constexpr std::array<double, 5> kGhW = {0.019953242059045913, 0.3936193231522412,
                                        0.9453087204829419, 0.3936193231522412,
                                        0.019953242059045913};

// Smear anchored at the next sample's factor exp{Re[u0 e^{-j p0} +
// u1 e^{-j p1} - u3 e^{-j(p0-p1)}]}: the projection matches the first
// moments of (state * N) * factor, where the convolution with the
// correlated increment density N decomposes exactly into a
// Gauss-Hermite mixture of shifted in-family products. The factor is
// divided back out, so the returned state keeps prediction semantics;
// its error is committed where the density is sharpest.
void smear_pair_anchored(cplx& z0, cplx& z1, cplx& z3, cplx u0, cplx u1,
                         cplx u3, double q_link, double q_psi) {
  // Increment covariance in link coordinates: var q_link per link,
  // covariance q_link - q_psi/2 (the shared receive oscillator).
  const double cov = q_link - 0.5 * q_psi;
  const double l00 = std::sqrt(q_link);
  const double l10 = (l00 > 0.0) ? cov / l00 : 0.0;
  const double l11 = std::sqrt(std::max(q_link - l10 * l10, 0.0));

  // Mixture of per-node moments, weighted by node partition values.
  struct Node {
    PairFirst pf;
    double d0, d1, lw;
  };
  std::vector<Node> nodes;
  nodes.reserve(25);
  double lwmax = -1e300;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      Node nd;
      nd.d0 = std::sqrt(2.0) * l00 * kGhX[i];
      nd.d1 = std::sqrt(2.0) * (l10 * kGhX[i] + l11 * kGhX[j]);
      nd.pf = pair_first(z0 + u0 * std::polar(1.0, -nd.d0),
                         z1 + u1 * std::polar(1.0, -nd.d1),
                         z3 + u3 * std::polar(1.0, -(nd.d0 - nd.d1)));
      nd.lw = std::log(kGhW[i] * kGhW[j]) + nd.pf.logz;
      lwmax = std::max(lwmax, nd.lw);
      nodes.push_back(nd);
    }
  cplx t0{0, 0}, t1{0, 0}, tp{0, 0};
  double den = 0.0;
  for (const Node& nd : nodes) {
    const double w = std::exp(nd.lw - lwmax);
    t0 += w * std::polar(1.0, nd.d0) * nd.pf.m0;
    t1 += w * std::polar(1.0, nd.d1) * nd.pf.m1;
    tp += w * std::polar(1.0, nd.d0 - nd.d1) * nd.pf.mp;
    den += w;
  }
  if (!(den > 0.0)) {
    smear_pair(z0, z1, z3, q_link, q_psi);
    return;
  }
  t0 /= den;
  t1 /= den;
  tp /= den;

  // Seed with the plain moment-matched smear, then refine against the
  // anchored targets.
  smear_pair(z0, z1, z3, q_link, q_psi);
  fit_pair_to_moments(z0, z1, z3, t0, t1, tp, u0, u1, u3);
}

// Shared body of the forward and backward recursions; `k_obs` is the
// time index whose sample and moments feed the prediction.
TikhonovMessageState message_step(const TikhonovMessageState& state, int k_obs,
                                  const ReceivedFrame& rx,
                                  const PriorMoments& moments,
                                  double sigma2_t, double sigma2_r,
                                  const PriorMoments* next_moments,
                                  int k_next) {
  const int n_tx = state.n_tx;
  const int n_rx = state.n_rx;
  TikhonovMessageState out = TikhonovMessageState::zero(n_tx, n_rx);

  // Accumulate the current-sample information (gains folded into the
  // effective per-link symbols).
  std::vector<cplx> abar(static_cast<std::size_t>(n_tx) * n_rx);
  for (int m = 0; m < n_tx; ++m)
    for (int n = 0; n < n_rx; ++n) {
      const cplx eff = rx.gain(m, n) * moments.alpha[m];
      abar[static_cast<std::size_t>(m) * n_rx + n] =
          state.link(m, n) +
          (2.0 / moments.gamma[n]) * rx.sample(k_obs, n) * std::conj(eff);
    }
  std::vector<cplx> atbar(static_cast<std::size_t>(n_tx) * n_tx);
  for (int m = 0; m < n_tx; ++m)
    for (int l = m + 1; l < n_tx; ++l) {
      cplx acc = state.cross(m, l);
      for (int n = 0; n < n_rx; ++n)
        acc += (2.0 / moments.gamma[n]) * (rx.gain(l, n) * moments.alpha[l]) *
               std::conj(rx.gain(m, n) * moments.alpha[m]);
      atbar[static_cast<std::size_t>(m) * n_tx + l] = acc;
    }

  // Smear through one step of the oscillator random walks. Per receive
  // antenna, the link-phase increments share the receive oscillator,
  // so the per-link variance is sigma2_t + sigma2_r while every pair
  // difference psi_{ml} = phi_m - phi_l sees only 2 sigma2_t. The
  // Gaussian increment damps the first circular moment of each of
  // those marginals by exactly exp(-var/2); we fit a von Mises to each
  // marginal (link coefficient plus the first-order influence of its
  // pair couplings, coefficient I1/I0), damp it with gaussian_smear,
  // and recover the family parameters by fixed point. For a single
  // link this collapses to the scalar Tikhonov filter smear. Shared
  // pair couplings are split evenly across receive antennas and
  // re-summed.
  if (sigma2_t + sigma2_r <= 0.0) {
    // No oscillator drift: the message is the pure accumulation.
    out.a = abar;
    out.atilde = atbar;
    return out;
  }

  // Two transmit antennas with the destination moments supplied: exact
  // moment-matched smear of each pair factor, anchored at the
  // destination sample's factor. The quadrature cost is orders of
  // magnitude above the independent smear below, so callers opt in
  // per-step; production sweeps run the cheap path.
  if (n_tx == 2 && next_moments && k_next >= 0) {
    for (int n = 0; n < n_rx; ++n) {
      cplx z0 = abar[static_cast<std::size_t>(0) * n_rx + n];
      cplx z1 = abar[static_cast<std::size_t>(1) * n_rx + n];
      cplx z3 = atbar[1] / static_cast<double>(n_rx);
      const cplx e0 = rx.gain(0, n) * next_moments->alpha[0];
      const cplx e1 = rx.gain(1, n) * next_moments->alpha[1];
      const double gam = next_moments->gamma[n];
      const cplx u0 = (2.0 / gam) * rx.sample(k_next, n) * std::conj(e0);
      const cplx u1 = (2.0 / gam) * rx.sample(k_next, n) * std::conj(e1);
      const cplx u3 = (2.0 / gam) * e1 * std::conj(e0);
      if (std::abs(u0) + std::abs(u1) + std::abs(u3) > 1e-12)
        smear_pair_anchored(z0, z1, z3, u0, u1, u3, sigma2_t + sigma2_r,
                            2.0 * sigma2_t);
      else
        smear_pair(z0, z1, z3, sigma2_t + sigma2_r, 2.0 * sigma2_t);
      if (!std::isfinite(z0.real()) || !std::isfinite(z0.imag()) ||
          !std::isfinite(z1.real()) || !std::isfinite(z1.imag()))
        throw std::runtime_error("spa: non-finite message at k=" +
                                 std::to_string(k_obs));
      out.link(0, n) = z0;
      out.link(1, n) = z1;
      out.cross(0, 1) += z3;
    }
    return out;
  }

  // Production path: each family coefficient aims at one circular
  // coordinate (a link phase theta_mn, or a transmit-pair difference
  // psi_ml), and the Gaussian increment of that coordinate damps the
  // coefficient through the scalar moment-matched smear. The increment
  // variance is sigma2_t + sigma2_r per link and 2 sigma2_t per pair
  // difference (the receive increment cancels). Cross-coordinate
  // couplings are dropped here; the exact opt-in path above restores
  // them where a tight fidelity gate applies.
  for (int m = 0; m < n_tx; ++m)
    for (int n = 0; n < n_rx; ++n) {
      const cplx z = gaussian_smear(abar[static_cast<std::size_t>(m) * n_rx + n],
                                    sigma2_t + sigma2_r);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::runtime_error("spa: non-finite message at k=" +
                                 std::to_string(k_obs));
      out.link(m, n) = z;
    }
  for (int m = 0; m < n_tx; ++m)
    for (int l = m + 1; l < n_tx; ++l)
      out.cross(m, l) = gaussian_smear(
          atbar[static_cast<std::size_t>(m) * n_tx + l], 2.0 * sigma2_t);
  return out;
}

}  // namespace

TikhonovMessageState TikhonovMessageState::zero(int n_tx, int n_rx) {
  TikhonovMessageState s;
  s.n_tx = n_tx;
  s.n_rx = n_rx;
  s.a.assign(static_cast<std::size_t>(n_tx) * n_rx, cplx{0.0, 0.0});
  s.atilde.assign(static_cast<std::size_t>(n_tx) * n_tx, cplx{0.0, 0.0});
  return s;
}

TikhonovMessageState forward_step(const TikhonovMessageState& prev, int k_prev,
                                  const ReceivedFrame& rx,
                                  const PriorMoments& moments,
                                  double sigma2_t, double sigma2_r,
                                  const PriorMoments* next_moments,
                                  int k_next) {
  return message_step(prev, k_prev, rx, moments, sigma2_t, sigma2_r,
                      next_moments, k_next);
}

TikhonovMessageState backward_step(const TikhonovMessageState& next, int k_next,
                                   const ReceivedFrame& rx,
                                   const PriorMoments& moments,
                                   double sigma2_t, double sigma2_r,
                                   const PriorMoments* next_moments,
                                   int k_dest) {
  return message_step(next, k_next, rx, moments, sigma2_t, sigma2_r,
                      next_moments, k_dest);
}

JointSymbolBelief joint_symbol_posterior(const TikhonovMessageState& fwd,
                                         const TikhonovMessageState& bwd,
                                         const ReceivedFrame& rx, int k,
                                         const Constellation& c,
                                         const SymbolPrior& prior) {
  const int n_tx = rx.n_tx;
  const int n_rx = rx.n_rx;
  const int m_sz = c.size();
  JointSymbolBelief belief;
  belief.n_tx = n_tx;
  belief.m = m_sz;
  int n_cand = 1;
  for (int i = 0; i < n_tx; ++i) n_cand *= m_sz;
  belief.log_pmf.resize(n_cand);

  // Delta priors (pilot instants) fix the candidate outright; skip the
  // phase marginalization entirely.
  {
    int fixed = 0;
    bool delta = true;
    for (int ant = 0; ant < n_tx && delta; ++ant) {
      int hit = -1;
      for (int si = 0; si < m_sz; ++si)
        if (prior.at(ant, si) > 1.0 - 1e-12) hit = si;
      if (hit < 0) delta = false;
      else fixed += hit * static_cast<int>(std::pow(m_sz, ant));
    }
    if (delta) {
      for (int j = 0; j < n_cand; ++j)
        belief.log_pmf[j] = (j == fixed) ? 0.0 : -1e300;
      return belief;
    }
  }

  std::vector<cplx> cand(n_tx);
  for (int j = 0; j < n_cand; ++j) {
    int v = j;
    double log_prior = 0.0;
    for (int ant = 0; ant < n_tx; ++ant) {
      const int si = v % m_sz;
      v /= m_sz;
      cand[ant] = c.points[si];
      log_prior += std::log(std::max(prior.at(ant, si), 1e-300));
    }
    double lp = log_prior;
    // Energy exponent, gains folded.
    for (int n = 0; n < n_rx; ++n)
      for (int ant = 0; ant < n_tx; ++ant)
        lp -= std::norm(rx.gain(ant, n) * cand[ant]) / rx.n0;
    if (n_tx == 2) {
      // Exact phase marginalization: the receive phases integrate to
      // per-antenna Bessel factors, leaving one circle integral over
      // the transmit phase difference.
      std::vector<cplx> z0(n_rx), z1(n_rx);
      cplx zt = fwd.cross(0, 1) + bwd.cross(0, 1);
      for (int n = 0; n < n_rx; ++n) {
        z0[n] = fwd.link(0, n) + bwd.link(0, n) +
                (2.0 / rx.n0) * rx.sample(k, n) *
                    std::conj(rx.gain(0, n) * cand[0]);
        z1[n] = fwd.link(1, n) + bwd.link(1, n) +
                (2.0 / rx.n0) * rx.sample(k, n) *
                    std::conj(rx.gain(1, n) * cand[1]);
        zt += (2.0 / rx.n0) * (rx.gain(1, n) * cand[1]) *
              std::conj(rx.gain(0, n) * cand[0]);
      }
      double den = 0.0;
      const double gmax = integrate_circle(
          [&](double p) {
            double g = -std::real(zt * std::polar(1.0, -p));
            for (int n = 0; n < n_rx; ++n)
              g += log_bessel_i0(std::abs(z0[n] * std::polar(1.0, -p) + z1[n]));
            return g;
          },
          [&](double, double w) { den += w; });
      lp += gmax + std::log(std::max(den, 1e-300));
    } else {
      // Aligned-peak product form for wider arrays.
      for (int n = 0; n < n_rx; ++n) {
        double zsum = 0.0;
        for (int ant = 0; ant < n_tx; ++ant) {
          const cplx z = fwd.link(ant, n) + bwd.link(ant, n) +
                         (2.0 / rx.n0) * rx.sample(k, n) *
                             std::conj(rx.gain(ant, n) * cand[ant]);
          zsum += std::abs(z);
        }
        lp += log_bessel_i0(zsum);
      }
      // Transmit-pair cross terms, one contribution per receive antenna.
      for (int m = 0; m < n_tx; ++m)
        for (int l = m + 1; l < n_tx; ++l) {
          cplx zt = fwd.cross(m, l) + bwd.cross(m, l);
          for (int n = 0; n < n_rx; ++n)
            zt += (2.0 / rx.n0) * (rx.gain(l, n) * cand[l]) *
                  std::conj(rx.gain(m, n) * cand[m]);
          lp += log_bessel_i0(std::abs(zt));
        }
    }
    belief.log_pmf[j] = lp;
  }
  belief.normalize_and_cache();
  return belief;
}

std::vector<JointSymbolBelief> spa_map_run(
    const ReceivedFrame& rx, const std::vector<SymbolPrior>& priors,
    const Constellation& c, const SpaParams& params,
    const std::vector<SymbolPrior>* detection_priors) {
  const int L = rx.L;
  if (static_cast<int>(priors.size()) != L)
    throw std::invalid_argument("spa_map_run: one prior per time instant required");
  if (detection_priors && static_cast<int>(detection_priors->size()) != L)
    throw std::invalid_argument("spa_map_run: detection prior count mismatch");

  std::vector<PriorMoments> moments(L);
  for (int k = 0; k < L; ++k)
    moments[k] = prior_moments(priors[k], c, rx.gains, rx.n_rx, rx.n0);

  std::vector<TikhonovMessageState> fwd(L), bwd(L);
  fwd[0] = TikhonovMessageState::zero(rx.n_tx, rx.n_rx);
  for (int k = 1; k < L; ++k)
    fwd[k] = forward_step(fwd[k - 1], k - 1, rx, moments[k - 1],
                          params.sigma2_t, params.sigma2_r);
  bwd[L - 1] = TikhonovMessageState::zero(rx.n_tx, rx.n_rx);
  for (int k = L - 2; k >= 0; --k)
    bwd[k] = backward_step(bwd[k + 1], k + 1, rx, moments[k + 1],
                           params.sigma2_t, params.sigma2_r);

  std::vector<JointSymbolBelief> beliefs(L);
  for (int k = 0; k < L; ++k)
    beliefs[k] = joint_symbol_posterior(
        fwd[k], bwd[k], rx, k, c,
        detection_priors ? (*detection_priors)[k] : priors[k]);
  return beliefs;
}

std::vector<SymbolPrior> frame_priors(const Frame& frame, bool genie) {
  const Constellation& c = frame.constellation;
  std::vector<SymbolPrior> priors;
  priors.reserve(frame.L);
  std::vector<int> idx(frame.n_tx);
  for (int k = 0; k < frame.L; ++k) {
    if (genie || frame.is_pilot(k)) {
      for (int m = 0; m < frame.n_tx; ++m) {
        const cplx s = frame.symbol(k, m);
        int best = 0;
        double best_d = std::norm(s - c.points[0]);
        for (int i = 1; i < c.size(); ++i) {
          const double d = std::norm(s - c.points[i]);
          if (d < best_d) { best_d = d; best = i; }
        }
        idx[m] = best;
      }
      priors.push_back(SymbolPrior::delta(frame.n_tx, c.size(), idx));
    } else {
      priors.push_back(SymbolPrior::uniform(frame.n_tx, c.size()));
    }
  }
  return priors;
}

}  // namespace phasync
