#pragma once

// Symbol-pmf computation from the Gaussian phase posterior (Gauss-MAP,
// EUC-MAP, VB-MAP) and the smoother-detector iteration controller.

#include <string>
#include <vector>

#include "phasync/smoother.hpp"
#include "phasync/spa.hpp"

namespace phasync {

enum class DetectorKind { SpaMap, GaussMap, EucMap, VbMap, GenieSpaMap };

std::string detector_name(DetectorKind kind);
DetectorKind detector_by_name(const std::string& name);

/// Solves P12 = -u / sqrt((1/P11 - u)(1/P22 - u)) for the nonnegative
/// concentration u on [0, min(1/P11, 1/P22)). P12 > 0 admits no
/// nonnegative root of this form; 0 is returned and the counter bumped.
struct UtildeSolve {
  double value = 0.0;
  double residual = 0.0;
  bool positive_correlation = false;
};
UtildeSolve solve_u_tilde(double p11, double p22, double p12);

/// Smoother-detector belief: marginalizes the current sample against
/// the Gaussian posterior mapped into the Tikhonov family. Each
/// receive antenna's phase integral is evaluated at its aligned peak
/// (closed-form coordinate ascent over the link phases) plus the
/// circular curvature correction; with one transmit antenna this is
/// exactly log I0(|u|), and at P -> 0 it collapses termwise to the
/// Euclidean metric.
JointSymbolBelief gauss_map_belief(const ReceivedFrame& rx, int k,
                                   const PhasePosterior& post,
                                   const Constellation& c,
                                   const SymbolPrior& prior);

/// Euclidean baseline: the smoothed phase estimate is treated as truth.
JointSymbolBelief euc_map_belief(const ReceivedFrame& rx, int k,
                                 const PhasePosterior& post,
                                 const Constellation& c,
                                 const SymbolPrior& prior);

/// Variational-Bayes belief: expectation of the log-likelihood under
/// the Gaussian phase posterior (closed form via the Gaussian
/// characteristic function). Equals the Euclidean belief termwise at
/// P = 0.
JointSymbolBelief vb_belief(const ReceivedFrame& rx, int k,
                            const PhasePosterior& post,
                            const Constellation& c,
                            const SymbolPrior& prior);

struct IterateParams {
  SmootherParams smoother;
  int n_iters = 2;  // smoother <-> detector rounds
};

struct DetectorDiagnostics {
  int clamped_i0_args = 0;
  int positive_correlations = 0;
};

/// Smoother-detector loop for GaussMap / EucMap / VbMap: alternates the
/// phase smoother (soft symbols from the current beliefs; pilots fixed)
/// with the chosen belief operation. Pilot positions come back as
/// deltas. VB starts from the Euclidean belief on the pilot-initialized
/// smoother.
std::vector<JointSymbolBelief> iterate(const ReceivedFrame& rx,
                                       DetectorKind kind, const Frame& frame,
                                       const std::vector<SymbolPrior>& priors,
                                       const IterateParams& params,
                                       DetectorDiagnostics* diag = nullptr);

}  // namespace phasync
