#include "phasync/detectors.hpp"

#include <cmath>
#include <stdexcept>

namespace phasync {

std::string detector_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::SpaMap: return "spa-map";
    case DetectorKind::GaussMap: return "gauss-map";
    case DetectorKind::EucMap: return "euc-map";
    case DetectorKind::VbMap: return "vb-map";
    case DetectorKind::GenieSpaMap: return "genie-spa-map";
  }
  throw std::logic_error("unreachable");
}

DetectorKind detector_by_name(const std::string& name) {
  if (name == "spa-map") return DetectorKind::SpaMap;
  if (name == "gauss-map") return DetectorKind::GaussMap;
  if (name == "euc-map") return DetectorKind::EucMap;
  if (name == "vb-map") return DetectorKind::VbMap;
  if (name == "genie-spa-map") return DetectorKind::GenieSpaMap;
  throw std::invalid_argument("unknown detector: " + name);
}

UtildeSolve solve_u_tilde(double p11, double p22, double p12) {
  UtildeSolve out;
  if (!(p11 > 0.0) || !(p22 > 0.0))
    throw std::invalid_argument("solve_u_tilde: diagonal entries must be > 0");
  if (p12 > 0.0) {
    out.positive_correlation = true;
    return out;
  }
  if (p12 == 0.0) return out;

  const double hi_cap = std::min(1.0 / p11, 1.0 / p22);
  auto f = [&](double u) {
    return -u / std::sqrt((1.0 / p11 - u) * (1.0 / p22 - u)) - p12;
  };
  // f(0) = -p12 >= 0 and f -> -inf at the cap; bisection.
  double lo = 0.0, hi = hi_cap * (1.0 - 1e-15);
  if (f(hi) > 0.0) {  // numerically degenerate correlation, saturate
    out.value = hi;
    out.residual = std::abs(f(hi));
    return out;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  out.value = 0.5 * (lo + hi);
  out.residual = std::abs(f(out.value));
  return out;
}

namespace {

JointSymbolBelief make_belief_shell(int n_tx, const Constellation& c) {
  JointSymbolBelief b;
  b.n_tx = n_tx;
  b.m = c.size();
  int n_cand = 1;
  for (int i = 0; i < n_tx; ++i) n_cand *= c.size();
  b.log_pmf.resize(n_cand);
  return b;
}

double candidate_log_prior(const SymbolPrior& prior, int candidate, int m_sz,
                           int n_tx) {
  double lp = 0.0;
  int v = candidate;
  for (int ant = 0; ant < n_tx; ++ant) {
    lp += std::log(std::max(prior.at(ant, v % m_sz), 1e-300));
    v /= m_sz;
  }
  return lp;
}

constexpr double kCovFloor = 1e-12;

}  // namespace

JointSymbolBelief gauss_map_belief(const ReceivedFrame& rx, int k,
                                   const PhasePosterior& post,
                                   const Constellation& c,
                                   const SymbolPrior& prior) {
  const int n_tx = rx.n_tx;
  const int n_rx = rx.n_rx;
  JointSymbolBelief b = make_belief_shell(n_tx, c);

  // Concentrations from each covariance block, once per k: the
  // bivariate Tikhonov factors are matched to the joint Gaussian
  // precision matrix (pair coupling = off-diagonal precision, link
  // concentration = diagonal precision plus its couplings), so the
  // second-order expansion around the estimates reproduces the full
  // correlated posterior. Positive off-diagonal precision (positive
  // phase correlation) has no Tikhonov counterpart and is clamped off.
  std::vector<double> ut_mag(static_cast<std::size_t>(n_rx) * n_tx * n_tx, 0.0);
  std::vector<double> kappa(static_cast<std::size_t>(n_rx) * n_tx, 0.0);
  for (int n = 0; n < n_rx; ++n) {
    Eigen::MatrixXd P = post.P(k, n);
    for (int m = 0; m < n_tx; ++m) P(m, m) = std::max(P(m, m), kCovFloor);
    const Eigen::MatrixXd A = P.inverse();
    for (int m = 0; m < n_tx; ++m) {
      double k_m = A(m, m);
      for (int l = 0; l < n_tx; ++l) {
        if (l == m) continue;
        const double coupling = std::max(A(m, l), 0.0);
        k_m += coupling;
        if (m < l)
          ut_mag[(static_cast<std::size_t>(n) * n_tx + m) * n_tx + l] = coupling;
      }
      kappa[static_cast<std::size_t>(n) * n_tx + m] = std::max(k_m, kCovFloor);
    }
  }

  std::vector<cplx> cand(n_tx);
  for (int j = 0; j < b.candidate_count(); ++j) {
    int v = j;
    for (int ant = 0; ant < n_tx; ++ant) {
      cand[ant] = c.points[v % c.size()];
      v /= c.size();
    }
    double lp = candidate_log_prior(prior, j, c.size(), n_tx);
    for (int n = 0; n < n_rx; ++n) {
      // Tikhonov coefficients of the joint phase density for this
      // candidate: a link term u_m per transmit antenna and a cross
      // coupling ut_{ml} per pair, exp{ sum Re[u_m e^{-j th_m}]
      //                                - sum Re[ut_{ml} e^{-j(th_m-th_l)}] }.
      std::vector<cplx> u(n_tx), ut(static_cast<std::size_t>(n_tx) * n_tx);
      for (int m = 0; m < n_tx; ++m) {
        const cplx eff = rx.gain(m, n) * cand[m];
        lp -= std::norm(eff) / rx.n0;
        u[m] = (2.0 / rx.n0) * rx.sample(k, n) * std::conj(eff) +
               std::polar(kappa[static_cast<std::size_t>(n) * n_tx + m],
                          post.theta(k, m, n));
      }
      for (int m = 0; m < n_tx; ++m)
        for (int l = m + 1; l < n_tx; ++l)
          ut[static_cast<std::size_t>(m) * n_tx + l] =
              (2.0 / rx.n0) * (rx.gain(l, n) * cand[l]) *
                  std::conj(rx.gain(m, n) * cand[m]) +
              std::polar(ut_mag[(static_cast<std::size_t>(n) * n_tx + m) * n_tx + l],
                         post.theta(k, m, n) - post.theta(k, l, n));

      // Maximize the exponent by coordinate ascent; each coordinate
      // update is exact (theta_m = arg of its aligned coefficient), so
      // the sweep is monotone. Seeded at arg(u_m), which sits next to
      // the smoothed estimates whenever the estimator is informative.
      std::vector<double> th(n_tx);
      std::vector<cplx> w(n_tx);
      for (int m = 0; m < n_tx; ++m) th[m] = std::arg(u[m]);
      for (int sweep = 0; sweep < 64; ++sweep) {
        double moved = 0.0;
        for (int m = 0; m < n_tx; ++m) {
          cplx wm = u[m];
          for (int l = 0; l < n_tx; ++l) {
            if (l == m) continue;
            if (m < l)
              wm -= ut[static_cast<std::size_t>(m) * n_tx + l] *
                    std::polar(1.0, th[l]);
            else
              wm -= std::conj(ut[static_cast<std::size_t>(l) * n_tx + m]) *
                    std::polar(1.0, th[l]);
          }
          w[m] = wm;
          const double next = std::arg(wm);
          moved = std::max(moved, std::abs(circular_distance(next, th[m])));
          th[m] = next;
        }
        if (moved < 1e-12) break;
      }
      double fmax = 0.0;
      for (int m = 0; m < n_tx; ++m)
        fmax += std::real(u[m] * std::polar(1.0, -th[m]));
      for (int m = 0; m < n_tx; ++m)
        for (int l = m + 1; l < n_tx; ++l)
          fmax -= std::real(ut[static_cast<std::size_t>(m) * n_tx + l] *
                            std::polar(1.0, th[l] - th[m]));
      // Peak value plus the circular curvature correction; with a
      // single transmit antenna this is exactly log I0(|u|). The pair
      // couplings contribute off-diagonal curvature, folded in through
      // the determinant ratio of the full negated Hessian to its
      // diagonal.
      lp += fmax;
      double log_diag = 0.0;
      for (int m = 0; m < n_tx; ++m) {
        const double km = std::abs(w[m]);
        lp += log_bessel_i0(km) - km;
        log_diag += std::log(std::max(km, kCovFloor));
      }
      if (n_tx > 1) {
        Eigen::MatrixXd neg_hess = Eigen::MatrixXd::Zero(n_tx, n_tx);
        for (int m = 0; m < n_tx; ++m)
          neg_hess(m, m) = std::max(std::abs(w[m]), kCovFloor);
        for (int m = 0; m < n_tx; ++m)
          for (int l = m + 1; l < n_tx; ++l) {
            const double cml =
                std::real(ut[static_cast<std::size_t>(m) * n_tx + l] *
                          std::polar(1.0, th[l] - th[m]));
            neg_hess(m, l) = neg_hess(l, m) = cml;
          }
        const double det = neg_hess.determinant();
        if (det > 0.0) lp += 0.5 * (log_diag - std::log(det));
      }
    }
    b.log_pmf[j] = lp;
  }
  b.normalize_and_cache();
  return b;
}

JointSymbolBelief euc_map_belief(const ReceivedFrame& rx, int k,
                                 const PhasePosterior& post,
                                 const Constellation& c,
                                 const SymbolPrior& prior) {
  const int n_tx = rx.n_tx;
  JointSymbolBelief b = make_belief_shell(n_tx, c);
  std::vector<cplx> cand(n_tx);
  for (int j = 0; j < b.candidate_count(); ++j) {
    int v = j;
    for (int ant = 0; ant < n_tx; ++ant) {
      cand[ant] = c.points[v % c.size()];
      v /= c.size();
    }
    double lp = candidate_log_prior(prior, j, c.size(), n_tx);
    for (int n = 0; n < rx.n_rx; ++n) {
      cplx pred{0.0, 0.0};
      for (int m = 0; m < n_tx; ++m)
        pred += rx.gain(m, n) * cand[m] * std::polar(1.0, post.theta(k, m, n));
      lp -= std::norm(rx.sample(k, n) - pred) / rx.n0;
    }
    b.log_pmf[j] = lp;
  }
  b.normalize_and_cache();
  return b;
}

JointSymbolBelief vb_belief(const ReceivedFrame& rx, int k,
                            const PhasePosterior& post,
                            const Constellation& c,
                            const SymbolPrior& prior) {
  const int n_tx = rx.n_tx;
  JointSymbolBelief b = make_belief_shell(n_tx, c);
  std::vector<cplx> cand(n_tx);
  for (int j = 0; j < b.candidate_count(); ++j) {
    int v = j;
    for (int ant = 0; ant < n_tx; ++ant) {
      cand[ant] = c.points[v % c.size()];
      v /= c.size();
    }
    double lp = candidate_log_prior(prior, j, c.size(), n_tx);
    for (int n = 0; n < rx.n_rx; ++n) {
      const Eigen::MatrixXd& P = post.P(k, n);
      // E_q |r - sum_m g_m e^{j theta_m}|^2 in closed form under the
      // Gaussian posterior; the |r|^2 constant is dropped.
      double e = 0.0;
      for (int m = 0; m < n_tx; ++m) {
        const cplx g = rx.gain(m, n) * cand[m];
        e += std::norm(g);
        e -= 2.0 * std::exp(-0.5 * P(m, m)) *
             std::real(std::conj(rx.sample(k, n)) * g *
                       std::polar(1.0, post.theta(k, m, n)));
        for (int l = m + 1; l < n_tx; ++l) {
          const cplx gl = rx.gain(l, n) * cand[l];
          const double att =
              std::exp(-0.5 * (P(m, m) + P(l, l) - 2.0 * P(m, l)));
          e += 2.0 * att *
               std::real(g * std::conj(gl) *
                         std::polar(1.0, post.theta(k, m, n) -
                                             post.theta(k, l, n)));
        }
      }
      lp -= e / rx.n0;
    }
    b.log_pmf[j] = lp;
  }
  b.normalize_and_cache();
  return b;
}

namespace {

JointSymbolBelief delta_belief(int n_tx, const Constellation& c,
                               const std::vector<int>& sym_idx) {
  JointSymbolBelief b = make_belief_shell(n_tx, c);
  int target = 0;
  for (int ant = n_tx - 1; ant >= 0; --ant)
    target = target * c.size() + sym_idx[ant];
  for (int j = 0; j < b.candidate_count(); ++j)
    b.log_pmf[j] = (j == target) ? 0.0 : -700.0;
  b.normalize_and_cache();
  return b;
}

int nearest_point(const Constellation& c, cplx s) {
  int best = 0;
  double best_d = std::norm(s - c.points[0]);
  for (int i = 1; i < c.size(); ++i) {
    const double d = std::norm(s - c.points[i]);
    if (d < best_d) { best_d = d; best = i; }
  }
  return best;
}

}  // namespace

std::vector<JointSymbolBelief> iterate(const ReceivedFrame& rx,
                                       DetectorKind kind, const Frame& frame,
                                       const std::vector<SymbolPrior>& priors,
                                       const IterateParams& params,
                                       DetectorDiagnostics* diag) {
  if (kind != DetectorKind::GaussMap && kind != DetectorKind::EucMap &&
      kind != DetectorKind::VbMap)
    throw std::invalid_argument("iterate: smoother-detector kinds only");

  const int L = rx.L;
  const int n_tx = rx.n_tx;
  const Constellation& c = frame.constellation;

  // Pilots are exact; data starts fully unknown at the prior's moments.
  std::vector<SoftSymbol> soft(static_cast<std::size_t>(L) * n_tx);
  for (int k = 0; k < L; ++k)
    for (int m = 0; m < n_tx; ++m) {
      auto& s = soft[static_cast<std::size_t>(k) * n_tx + m];
      if (frame.is_pilot(k)) {
        s.mean = frame.symbol(k, m);
        s.var = 0.0;
      } else {
        std::vector<double> pmf(c.size());
        for (int i = 0; i < c.size(); ++i) pmf[i] = priors[k].at(m, i);
        s = soft_stats(pmf, c);
      }
    }

  std::vector<JointSymbolBelief> beliefs(L);
  std::vector<int> pilot_idx(n_tx);
  for (int it = 0; it < params.n_iters; ++it) {
    const PhasePosterior post =
        smooth_phases(rx, soft, params.smoother, frame.pilot_mask);
    const bool use_euc =
        kind == DetectorKind::EucMap || (kind == DetectorKind::VbMap && it == 0);
    for (int k = 0; k < L; ++k) {
      if (frame.is_pilot(k)) {
        for (int m = 0; m < n_tx; ++m)
          pilot_idx[m] = nearest_point(c, frame.symbol(k, m));
        beliefs[k] = delta_belief(n_tx, c, pilot_idx);
        continue;
      }
      if (use_euc)
        beliefs[k] = euc_map_belief(rx, k, post, c, priors[k]);
      else if (kind == DetectorKind::GaussMap)
        beliefs[k] = gauss_map_belief(rx, k, post, c, priors[k]);
      else
        beliefs[k] = vb_belief(rx, k, post, c, priors[k]);
    }
    if (it + 1 < params.n_iters) {
      for (int k = 0; k < L; ++k) {
        if (frame.is_pilot(k)) continue;
        const auto s = belief_soft_symbols(beliefs[k], c);
        for (int m = 0; m < n_tx; ++m)
          soft[static_cast<std::size_t>(k) * n_tx + m] = s[m];
      }
    }
  }
  (void)diag;
  return beliefs;
}

}  // namespace phasync
