// Microbenchmarks for the hot paths: the scaled Bessel evaluation, one
// SPA message step, the forward Kalman sweep, and LDPC decoding.
#include <benchmark/benchmark.h>

#include <vector>

#include "phasync/channel.hpp"
#include "phasync/circmath.hpp"
#include "phasync/coding.hpp"
#include "phasync/smoother.hpp"
#include "phasync/spa.hpp"

namespace {

using namespace phasync;

void BM_log_bessel_i0(benchmark::State& state) {
  const double x = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(log_bessel_i0(x));
}
BENCHMARK(BM_log_bessel_i0)->Arg(1)->Arg(20)->Arg(200);

struct MimoScene {
  Frame frame;
  ReceivedFrame rx;
  PriorMoments moments;
  double sigma2;

  explicit MimoScene(int n_tx, int n_rx, int l)
      : frame(make_frame(n_tx, l)),
        rx(make_rx(frame, n_rx)),
        sigma2(deg2_to_var(4.0)) {
    const SymbolPrior uni = SymbolPrior::uniform(n_tx, 2);
    moments = prior_moments(uni, frame.constellation,
                            unit_gains(n_tx, n_rx), n_rx, rx.n0);
  }

  static Frame make_frame(int n_tx, int l) {
    const Constellation c = Constellation::bpsk();
    const PilotPattern pattern{10, 20, 1};
    Rng rng(7);
    return build_frame(random_payload_bits(c, pattern, l, n_tx, rng), c,
                       pattern, l, n_tx);
  }
  static ReceivedFrame make_rx(const Frame& frame, int n_rx) {
    Rng rng(8);
    const double s2 = deg2_to_var(4.0);
    const PhaseTrajectory traj =
        sample_phase_trajectories(frame.L, frame.n_tx, n_rx, s2, s2, rng);
    return apply_channel(frame, traj, unit_gains(frame.n_tx, n_rx), 0.25, rng);
  }
  static double deg2_to_var(double deg) {
    const double rad = deg * (kTwoPi / 360.0);
    return rad * rad;
  }
};

void BM_forward_step(benchmark::State& state) {
  const int n_tx = static_cast<int>(state.range(0));
  MimoScene scene(n_tx, n_tx, 64);
  TikhonovMessageState msg = TikhonovMessageState::zero(n_tx, n_tx);
  int k = 0;
  for (auto _ : state) {
    msg = forward_step(msg, k, scene.rx, scene.moments, scene.sigma2,
                       scene.sigma2);
    k = (k + 1) % (scene.rx.L - 1);
    if (k == 0) msg = TikhonovMessageState::zero(n_tx, n_tx);
    benchmark::DoNotOptimize(msg.a.data());
  }
}
BENCHMARK(BM_forward_step)->Arg(1)->Arg(2)->Arg(4);

void BM_ekf_forward(benchmark::State& state) {
  const int n_tx = static_cast<int>(state.range(0));
  MimoScene scene(n_tx, n_tx, 200);
  std::vector<SoftSymbol> soft(static_cast<std::size_t>(scene.rx.L) * n_tx);
  std::vector<uint8_t> mask(scene.rx.L, 0);
  for (int k = 0; k < scene.rx.L; ++k) {
    mask[k] = scene.frame.is_pilot(k) ? 1 : 0;
    for (int m = 0; m < n_tx; ++m)
      soft[static_cast<std::size_t>(k) * n_tx + m] = {
          scene.frame.symbol(k, m), mask[k] ? 0.0 : 0.1};
  }
  const SmootherParams params{scene.sigma2, scene.sigma2, false};
  for (auto _ : state) {
    const FilterResult res = ekf_forward(scene.rx, soft, params, mask);
    benchmark::DoNotOptimize(res.mean.data());
  }
}
BENCHMARK(BM_ekf_forward)->Arg(2)->Arg(4);

void BM_bp_decode(benchmark::State& state) {
  const ParityCheckMatrix h = generate_ldpc(2000, 0.5, 3);
  Rng rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // LLRs of the all-zero codeword over an AWGN channel near threshold.
  std::vector<double> llrs(h.n);
  for (double& x : llrs) x = 2.0 + 1.4 * gauss(rng);
  for (auto _ : state) {
    const BpResult res = bp_decode(llrs, h, 50);
    benchmark::DoNotOptimize(res.hard_bits.data());
  }
}
BENCHMARK(BM_bp_decode);

}  // namespace

BENCHMARK_MAIN();
