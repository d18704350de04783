#include "phasync/smoother.hpp"

#include <cmath>
#include <stdexcept>

namespace phasync {

namespace {

constexpr double kLargePriorVar = M_PI * M_PI / 3.0;
constexpr double kMeanFloor = 1e-6;

// Symmetrize and floor eigenvalues at zero when the update has pushed a
// covariance out of the PSD cone.
bool repair_psd(Eigen::MatrixXd& P) {
  P = 0.5 * (P + P.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  if (es.eigenvalues().minCoeff() >= -1e-10 &&
      es.eigenvalues().minCoeff() >= 0.0)
    return false;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  P = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return true;
}

}  // namespace

Eigen::MatrixXd process_noise_cov(int n_tx, double sigma2_t, double sigma2_r) {
  return sigma2_t * Eigen::MatrixXd::Identity(n_tx, n_tx) +
         sigma2_r * Eigen::MatrixXd::Ones(n_tx, n_tx);
}

FilterResult ekf_forward(const ReceivedFrame& rx,
                         const std::vector<SoftSymbol>& soft,
                         const SmootherParams& params,
                         const std::vector<uint8_t>& pilot_mask) {
  const int L = rx.L;
  const int n_tx = rx.n_tx;
  const int n_rx = rx.n_rx;
  if (soft.size() != static_cast<std::size_t>(L) * n_tx)
    throw std::invalid_argument("ekf_forward: one soft symbol per (k, antenna)");

  FilterResult out;
  out.L = L;
  out.n_rx = n_rx;
  out.mean.resize(static_cast<std::size_t>(L) * n_rx);
  out.cov.resize(static_cast<std::size_t>(L) * n_rx);

  const Eigen::MatrixXd Q = process_noise_cov(n_tx, params.sigma2_t, params.sigma2_r);

  for (int n = 0; n < n_rx; ++n) {
    // Initialize from the leading pilot run: matched-phase fit per link
    // with a CRLB-like variance; large prior when no pilots lead.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_tx);
    Eigen::MatrixXd P =
        kLargePriorVar * Eigen::MatrixXd::Identity(n_tx, n_tx);
    {
      std::vector<cplx> corr(n_tx, cplx{0.0, 0.0});
      double energy = 0.0;
      int used = 0;
      for (int k = 0; k < L && pilot_mask[k]; ++k) {
        for (int m = 0; m < n_tx; ++m) {
          const cplx eff = rx.gain(m, n) * soft[static_cast<std::size_t>(k) * n_tx + m].mean;
          corr[m] += rx.sample(k, n) * std::conj(eff);
          energy += std::norm(eff);
        }
        ++used;
      }
      if (used > 0 && energy > 0.0) {
        for (int m = 0; m < n_tx; ++m) x[m] = std::arg(corr[m]);
        const double v0 = std::max(rx.n0 / (2.0 * energy), 1e-12);
        P = v0 * Eigen::MatrixXd::Identity(n_tx, n_tx);
      }
    }

    for (int k = 0; k < L; ++k) {
      if (k > 0) P += Q;  // identity transition, predict step

      // Measurement: r_k^(n) linearized at the predicted phases.
      double meas_var = rx.n0;
      cplx pred{0.0, 0.0};
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, n_tx);
      bool informative = false;
      for (int m = 0; m < n_tx; ++m) {
        const SoftSymbol& s = soft[static_cast<std::size_t>(k) * n_tx + m];
        if (!params.zero_symbol_variance)
          meas_var += std::norm(rx.gain(m, n)) * s.var;
        if (std::abs(s.mean) < kMeanFloor) continue;
        informative = true;
        const cplx g = rx.gain(m, n) * s.mean * std::polar(1.0, x[m]);
        pred += g;
        H(0, m) = -g.imag();
        H(1, m) = g.real();
      }

      if (informative) {
        const cplx resid = rx.sample(k, n) - pred;
        Eigen::Vector2d nu(resid.real(), resid.imag());
        const Eigen::Matrix2d R =
            0.5 * meas_var * Eigen::Matrix2d::Identity();
        const Eigen::Matrix2d S = H * P * H.transpose() + R;
        const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
        x += K * nu;
        P = ((Eigen::MatrixXd::Identity(n_tx, n_tx) - K * H) * P).eval();
        if (repair_psd(P)) ++out.psd_repairs;
      }
      out.mean[static_cast<std::size_t>(k) * n_rx + n] = x;
      out.cov[static_cast<std::size_t>(k) * n_rx + n] = P;
    }
  }
  return out;
}

PhasePosterior rts_backward(const FilterResult& filtered,
                            const ReceivedFrame& rx,
                            const SmootherParams& params) {
  const int L = filtered.L;
  const int n_rx = filtered.n_rx;
  const int n_tx = rx.n_tx;
  const Eigen::MatrixXd Q = process_noise_cov(n_tx, params.sigma2_t, params.sigma2_r);

  PhasePosterior post;
  post.L = L;
  post.n_tx = n_tx;
  post.n_rx = n_rx;
  post.theta_hat.resize(static_cast<std::size_t>(L) * n_tx * n_rx);
  post.cov.resize(static_cast<std::size_t>(L) * n_rx);

  for (int n = 0; n < n_rx; ++n) {
    Eigen::VectorXd xs = filtered.mean[static_cast<std::size_t>(L - 1) * n_rx + n];
    Eigen::MatrixXd Ps = filtered.cov[static_cast<std::size_t>(L - 1) * n_rx + n];
    post.cov[static_cast<std::size_t>(L - 1) * n_rx + n] = Ps;
    for (int m = 0; m < n_tx; ++m) post.theta(L - 1, m, n) = xs[m];

    for (int k = L - 2; k >= 0; --k) {
      const Eigen::VectorXd& xf = filtered.mean[static_cast<std::size_t>(k) * n_rx + n];
      const Eigen::MatrixXd& Pf = filtered.cov[static_cast<std::size_t>(k) * n_rx + n];
      const Eigen::MatrixXd Pp = Pf + Q;  // predicted covariance at k+1
      const Eigen::MatrixXd G = Pf * Pp.inverse();
      xs = xf + G * (xs - xf);  // identity transition: predicted mean = xf
      Ps = Pf + G * (Ps - Pp) * G.transpose();
      repair_psd(Ps);
      post.cov[static_cast<std::size_t>(k) * n_rx + n] = Ps;
      for (int m = 0; m < n_tx; ++m) post.theta(k, m, n) = xs[m];
    }
  }
  return post;
}

PhasePosterior smooth_phases(const ReceivedFrame& rx,
                             const std::vector<SoftSymbol>& soft,
                             const SmootherParams& params,
                             const std::vector<uint8_t>& pilot_mask) {
  return rts_backward(ekf_forward(rx, soft, params, pilot_mask), rx, params);
}

SoftSymbol soft_stats(const std::vector<double>& pmf, const Constellation& c) {
  SoftSymbol s;
  double energy = 0.0;
  double avg = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    s.mean += pmf[i] * c.points[i];
    energy += pmf[i] * std::norm(c.points[i]);
    avg += std::norm(c.points[i]);
  }
  avg /= c.size();
  const double raw = energy - std::norm(s.mean);
  // Delta pmfs (pilots, decided symbols) keep an exact zero variance;
  // anything genuinely soft is floored away from zero.
  s.var = raw < 1e-12 * avg ? 0.0 : std::max(raw, 1e-8 * avg);
  return s;
}

std::vector<SoftSymbol> belief_soft_symbols(const JointSymbolBelief& belief,
                                            const Constellation& c) {
  std::vector<SoftSymbol> out(belief.n_tx);
  std::vector<double> pmf(belief.m);
  for (int ant = 0; ant < belief.n_tx; ++ant) {
    for (int s = 0; s < belief.m; ++s) pmf[s] = belief.marginal(ant, s);
    out[ant] = soft_stats(pmf, c);
  }
  return out;
}

}  // namespace phasync
