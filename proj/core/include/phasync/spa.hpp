#pragma once

// Tikhonov-parameterized sum-product receiver: forward/backward message
// recursions over the per-link phase chain and the joint-symbol
// posterior, for arbitrary N_t x N_r with known channel gains.

#include <vector>

#include "phasync/channel.hpp"
#include "phasync/circmath.hpp"

namespace phasync {

/// Per-antenna pmf over constellation points, rows sum to 1.
struct SymbolPrior {
  int n_tx = 0;
  int m = 0;                  // constellation size
  std::vector<double> pmf;    // [n_tx * m]

  double& at(int ant, int sym) { return pmf[static_cast<std::size_t>(ant) * m + sym]; }
  double at(int ant, int sym) const { return pmf[static_cast<std::size_t>(ant) * m + sym]; }

  static SymbolPrior uniform(int n_tx, int m);
  static SymbolPrior delta(int n_tx, int m, const std::vector<int>& sym_idx);
};

/// Moment-matched Gaussian statistics of the symbol prior. gamma is per
/// receive antenna: the innovation variance of r_k^(n) given the phases
/// (collapses to the scalar form under unit gains).
struct PriorMoments {
  std::vector<cplx> alpha;    // [n_tx] mean symbol
  std::vector<double> beta;   // [n_tx] mean energy
  std::vector<double> gamma;  // [n_rx]
};

/// Forward or backward SPA message state at one time instant.
/// a holds the per-link Tikhonov parameters, atilde the transmit-side
/// cross-correlation terms for unordered antenna pairs m < l.
struct TikhonovMessageState {
  int n_tx = 0, n_rx = 0;
  std::vector<cplx> a;       // [n_tx * n_rx]
  std::vector<cplx> atilde;  // [n_tx * n_tx], strict upper triangle used

  static TikhonovMessageState zero(int n_tx, int n_rx);
  cplx& link(int m, int n) { return a[static_cast<std::size_t>(m) * n_rx + n]; }
  cplx link(int m, int n) const { return a[static_cast<std::size_t>(m) * n_rx + n]; }
  cplx& cross(int m, int l) { return atilde[static_cast<std::size_t>(m) * n_tx + l]; }
  cplx cross(int m, int l) const { return atilde[static_cast<std::size_t>(m) * n_tx + l]; }
  /// Cross term for the unordered pair {m, l}, m != l.
  cplx cross_pair(int m, int l) const {
    return m < l ? cross(m, l) : std::conj(cross(l, m));
  }
};

/// Normalized log-pmf over the joint symbol vector (M^{N_t} candidates,
/// antenna 0 is the least-significant digit), with cached per-antenna
/// marginals.
struct JointSymbolBelief {
  int n_tx = 0;
  int m = 0;
  std::vector<double> log_pmf;    // [m^n_tx], logsumexp == 0
  std::vector<double> marginals;  // [n_tx * m]

  int candidate_count() const { return static_cast<int>(log_pmf.size()); }
  int symbol_index(int candidate, int ant) const;
  /// argmax with lowest-index tie-break.
  int hard_decision() const;
  void normalize_and_cache();
  double marginal(int ant, int sym) const {
    return marginals[static_cast<std::size_t>(ant) * m + sym];
  }
};

/// Moment matching of the symbol prior (per-antenna mean and energy,
/// plus the per-receive-antenna innovation variance).
PriorMoments prior_moments(const SymbolPrior& prior, const Constellation& c,
                           const std::vector<cplx>& gains, int n_rx, double n0);

/// Tikhonov parameters of the current-sample factor for the 2x1 case:
/// x1, x2 aim at the two link phases, x3 at their difference.
BivariateTikhonovParam pd_params(cplx r, const PriorMoments& moments);

/// One forward step: consumes r_{k-1} and the moments at k-1, producing
/// the predicted message state at k. Initial state is all zeros
/// (uniform phase prior). When the destination instant's moments are
/// supplied (next_moments with its time index k_next = k), the family
/// projection is anchored at the product with that instant's sample
/// factor, where the density is sharply concentrated and the family fit
/// is tightest; the factor is divided back out of the stored state, so
/// the state semantics are unchanged.
TikhonovMessageState forward_step(const TikhonovMessageState& prev, int k_prev,
                                  const ReceivedFrame& rx,
                                  const PriorMoments& moments,
                                  double sigma2_t, double sigma2_r,
                                  const PriorMoments* next_moments = nullptr,
                                  int k_next = -1);

/// Time-reversed mirror of forward_step, consuming r_{k+1}.
TikhonovMessageState backward_step(const TikhonovMessageState& next, int k_next,
                                   const ReceivedFrame& rx,
                                   const PriorMoments& moments,
                                   double sigma2_t, double sigma2_r,
                                   const PriorMoments* next_moments = nullptr,
                                   int k_dest = -1);

/// Joint-symbol posterior at time k from the forward and backward
/// message states and the current sample.
JointSymbolBelief joint_symbol_posterior(const TikhonovMessageState& fwd,
                                         const TikhonovMessageState& bwd,
                                         const ReceivedFrame& rx, int k,
                                         const Constellation& c,
                                         const SymbolPrior& prior);

struct SpaParams {
  double sigma2_t = 0.0;
  double sigma2_r = 0.0;
};

/// Full SPA pass: forward recursion, backward recursion, per-k joint
/// posteriors. Prior refresh (decoder feedback) is the caller's loop.
/// detection_priors, when given, replace `priors` inside the posterior
/// only (benchmark mode: genie messages, fair detection).
std::vector<JointSymbolBelief> spa_map_run(
    const ReceivedFrame& rx, const std::vector<SymbolPrior>& priors,
    const Constellation& c, const SpaParams& params,
    const std::vector<SymbolPrior>* detection_priors = nullptr);

/// Priors for an uncoded frame: deltas at pilot positions (the fixed
/// pilot sequence), uniform elsewhere. genie=true turns every position
/// into a delta at the transmitted symbol (benchmark mode).
std::vector<SymbolPrior> frame_priors(const Frame& frame, bool genie = false);

}  // namespace phasync
