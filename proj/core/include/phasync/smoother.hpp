#pragma once

// Extended Kalman smoother over per-link phases, one smoother per
// receive antenna (state dimension N_t), with soft-symbol-aware
// linearized measurements.

#include <Eigen/Dense>
#include <vector>

#include "phasync/channel.hpp"
#include "phasync/spa.hpp"

namespace phasync {

/// Soft symbol conveyed to the smoother: pmf mean and variance.
struct SoftSymbol {
  cplx mean{0.0, 0.0};
  double var = 0.0;
};

/// Gaussian phase posterior: smoothed link-phase means and one N_t x N_t
/// covariance per (time, receive antenna).
struct PhasePosterior {
  int L = 0, n_tx = 0, n_rx = 0;
  std::vector<double> theta_hat;        // [L * n_tx * n_rx]
  std::vector<Eigen::MatrixXd> cov;     // [L * n_rx], each n_tx x n_tx

  double theta(int k, int m, int n) const {
    return theta_hat[(static_cast<std::size_t>(k) * n_tx + m) * n_rx + n];
  }
  double& theta(int k, int m, int n) {
    return theta_hat[(static_cast<std::size_t>(k) * n_tx + m) * n_rx + n];
  }
  const Eigen::MatrixXd& P(int k, int n) const {
    return cov[static_cast<std::size_t>(k) * n_rx + n];
  }
  Eigen::MatrixXd& P(int k, int n) {
    return cov[static_cast<std::size_t>(k) * n_rx + n];
  }
};

/// Process covariance of the N_t link phases of one receive antenna:
/// Q = sigma2_t I + sigma2_r 11^T (the receive increment is common).
Eigen::MatrixXd process_noise_cov(int n_tx, double sigma2_t, double sigma2_r);

struct SmootherParams {
  double sigma2_t = 0.0;
  double sigma2_r = 0.0;
  /// Zero the soft-symbol variance in the measurement noise
  /// (strict-VB experiments).
  bool zero_symbol_variance = false;
};

struct FilterResult {
  std::vector<Eigen::VectorXd> mean;  // [L * n_rx]
  std::vector<Eigen::MatrixXd> cov;   // [L * n_rx]
  int L = 0, n_rx = 0;
  int psd_repairs = 0;  // covariance floor repairs performed
};

/// Forward extended Kalman filter per receive antenna. soft[k*n_tx + m]
/// supplies the measurement model; entries with |mean| < 1e-6 skip the
/// update for that antenna's contribution.
FilterResult ekf_forward(const ReceivedFrame& rx,
                         const std::vector<SoftSymbol>& soft,
                         const SmootherParams& params,
                         const std::vector<uint8_t>& pilot_mask);

/// Rauch-Tung-Striebel backward pass over the filtered estimates.
PhasePosterior rts_backward(const FilterResult& filtered,
                            const ReceivedFrame& rx,
                            const SmootherParams& params);

/// Convenience: forward + backward.
PhasePosterior smooth_phases(const ReceivedFrame& rx,
                             const std::vector<SoftSymbol>& soft,
                             const SmootherParams& params,
                             const std::vector<uint8_t>& pilot_mask);

/// Mean and variance of a per-antenna marginal pmf; variance floored at
/// 1e-8 of the constellation average energy.
SoftSymbol soft_stats(const std::vector<double>& pmf, const Constellation& c);

/// Per-antenna soft symbols from a joint belief's cached marginals.
std::vector<SoftSymbol> belief_soft_symbols(const JointSymbolBelief& belief,
                                            const Constellation& c);

}  // namespace phasync
