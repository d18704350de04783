#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "phasync/channel.hpp"
#include "phasync/smoother.hpp"

using namespace phasync;

namespace {
constexpr double kDeg = M_PI / 180.0;

std::vector<SoftSymbol> pilot_soft(const Frame& frame) {
  std::vector<SoftSymbol> soft(static_cast<std::size_t>(frame.L) * frame.n_tx);
  for (int k = 0; k < frame.L; ++k)
    for (int m = 0; m < frame.n_tx; ++m)
      soft[static_cast<std::size_t>(k) * frame.n_tx + m] =
          frame.is_pilot(k) ? SoftSymbol{frame.symbol(k, m), 0.0}
                            : SoftSymbol{cplx{0.0, 0.0}, 1.0};
  return soft;
}
}  // namespace

TEST_CASE("process covariance structure") {
  const Eigen::MatrixXd qd = process_noise_cov(3, 0.01, 0.0);
  CHECK(qd.isApprox(0.01 * Eigen::MatrixXd::Identity(3, 3), 1e-12));

  const double s = std::pow(4.0 * kDeg, 2);
  const Eigen::MatrixXd q = process_noise_cov(2, s, s);
  CHECK(q(0, 0) == doctest::Approx(2.0 * s));
  CHECK(q(1, 1) == doctest::Approx(2.0 * s));
  CHECK(q(0, 1) == doctest::Approx(s));
  CHECK(q(1, 0) == doctest::Approx(s));
}

TEST_CASE("sampled link increments match the process covariance") {
  const double s2t = std::pow(4.0 * kDeg, 2);
  const double s2r = std::pow(3.0 * kDeg, 2);
  const int L = 400000;
  Rng rng(12345);
  const PhaseTrajectory traj =
      sample_phase_trajectories(L, 2, 1, s2t, s2r, rng);
  Eigen::Matrix2d emp = Eigen::Matrix2d::Zero();
  for (int k = 1; k < L; ++k) {
    const double d0 = traj.link(k, 0, 0) - traj.link(k - 1, 0, 0);
    const double d1 = traj.link(k, 1, 0) - traj.link(k - 1, 1, 0);
    emp(0, 0) += d0 * d0;
    emp(1, 1) += d1 * d1;
    emp(0, 1) += d0 * d1;
  }
  emp(1, 0) = emp(0, 1);
  emp /= (L - 1);
  const Eigen::MatrixXd q = process_noise_cov(2, s2t, s2r);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(emp(i, j) - q(i, j)) <= 0.02 * q(0, 0));
}

TEST_CASE("soft statistics of pmfs") {
  const Constellation bpsk = Constellation::bpsk();
  // Delta pmf.
  const SoftSymbol d = soft_stats({1.0, 0.0}, bpsk);
  CHECK(std::abs(d.mean - bpsk.points[0]) < 1e-12);
  CHECK(d.var == 0.0);
  // Uniform BPSK.
  const SoftSymbol u = soft_stats({0.5, 0.5}, bpsk);
  CHECK(std::abs(u.mean) < 1e-12);
  CHECK(u.var == doctest::Approx(1.0));
  // Skewed pmf on +-1.
  const double sgn = bpsk.points[0].real();
  const SoftSymbol s = soft_stats({0.9, 0.1}, bpsk);
  CHECK(s.mean.real() == doctest::Approx(0.8 * sgn));
  CHECK(s.var == doctest::Approx(0.36));
}

TEST_CASE("pilot-tracked filter converges to the constant phase") {
  // Static oscillators, nearly noiseless pilots: the filtered estimate
  // reaches the true phase within 0.1 degree after ten steps.
  Rng rng(77);
  const Constellation c = Constellation::bpsk();
  const int L = 20;
  const Frame frame = build_frame({}, c, PilotPattern::all_pilots(), L, 1);
  const PhaseTrajectory traj = sample_phase_trajectories(L, 1, 1, 0.0, 0.0, rng);
  const ReceivedFrame rx =
      apply_channel(frame, traj, unit_gains(1, 1), 1e-8, rng);
  SmootherParams params{0.0, 0.0, false};
  const FilterResult filt =
      ekf_forward(rx, pilot_soft(frame), params, frame.pilot_mask);
  for (int k = 10; k < L; ++k) {
    const double err =
        circular_distance(filt.mean[k](0), traj.link(0, 0, 0));
    CHECK(std::abs(err) < 0.1 * kDeg);
  }
}

TEST_CASE("unknown symbols only grow the covariance by the process noise") {
  Rng rng(78);
  const Constellation c = Constellation::bpsk();
  const int L = 8;
  const double s2 = std::pow(4.0 * kDeg, 2);
  const PilotPattern pattern{3, 100, 1};  // preamble only
  const Frame frame =
      build_frame(random_payload_bits(c, pattern, L, 1, rng), c, pattern, L, 1);
  const PhaseTrajectory traj = sample_phase_trajectories(L, 1, 1, s2, s2, rng);
  const ReceivedFrame rx =
      apply_channel(frame, traj, unit_gains(1, 1), 0.1, rng);
  // Data positions carry a zero-mean soft symbol: no measurement.
  SmootherParams params{s2, s2, false};
  const FilterResult filt =
      ekf_forward(rx, pilot_soft(frame), params, frame.pilot_mask);
  const Eigen::MatrixXd q = process_noise_cov(1, s2, s2);
  for (int k = 3; k < L; ++k)
    CHECK(filt.cov[k](0, 0) ==
          doctest::Approx(filt.cov[k - 1](0, 0) + q(0, 0)).epsilon(1e-9));
}

TEST_CASE("smoothing shrinks the filtered variance") {
  Rng rng(79);
  const Constellation c = Constellation::qpsk();
  const int L = 60;
  const double s2 = std::pow(4.0 * kDeg, 2);
  const PilotPattern pattern{5, 10, 1};
  const Frame frame =
      build_frame(random_payload_bits(c, pattern, L, 2, rng), c, pattern, L, 2);
  const PhaseTrajectory traj = sample_phase_trajectories(L, 2, 1, s2, s2, rng);
  const ReceivedFrame rx =
      apply_channel(frame, traj, unit_gains(2, 1), 0.1, rng);
  SmootherParams params{s2, s2, false};
  const std::vector<SoftSymbol> soft = pilot_soft(frame);
  const FilterResult filt = ekf_forward(rx, soft, params, frame.pilot_mask);
  const PhasePosterior post = rts_backward(filt, rx, params);

  double filt_tr = 0.0, smooth_tr = 0.0;
  int strict = 0, data_positions = 0;
  for (int k = 0; k < L; ++k) {
    filt_tr += filt.cov[k].trace();
    smooth_tr += post.P(k, 0).trace();
    if (!frame.is_pilot(k) && k + 1 < L) {
      ++data_positions;
      if (post.P(k, 0).trace() < filt.cov[k].trace() - 1e-12) ++strict;
    }
    // Posterior covariance stays symmetric PSD.
    CHECK((post.P(k, 0) - post.P(k, 0).transpose()).norm() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(post.P(k, 0));
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  CHECK(smooth_tr <= filt_tr + 1e-12);
  CHECK(strict >= static_cast<int>(0.9 * data_positions));
}

TEST_CASE("single-step frame: smoother equals filter") {
  Rng rng(80);
  const Constellation c = Constellation::bpsk();
  const Frame frame = build_frame({}, c, PilotPattern::all_pilots(), 1, 1);
  const PhaseTrajectory traj = sample_phase_trajectories(1, 1, 1, 0.0, 0.0, rng);
  const ReceivedFrame rx =
      apply_channel(frame, traj, unit_gains(1, 1), 0.1, rng);
  SmootherParams params{1e-4, 1e-4, false};
  const FilterResult filt =
      ekf_forward(rx, pilot_soft(frame), params, frame.pilot_mask);
  const PhasePosterior post = rts_backward(filt, rx, params);
  CHECK(post.theta(0, 0, 0) == doctest::Approx(filt.mean[0](0)).epsilon(1e-12));
  CHECK((post.P(0, 0) - filt.cov[0]).norm() < 1e-12);
}

TEST_CASE("rotating the received frame shifts the phase estimates") {
  Rng rng(81);
  const Constellation c = Constellation::bpsk();
  const int L = 30;
  const double s2 = std::pow(2.0 * kDeg, 2);
  const Frame frame = build_frame({}, c, PilotPattern::all_pilots(), L, 1);
  const PhaseTrajectory traj = sample_phase_trajectories(L, 1, 1, s2, 0.0, rng);
  const ReceivedFrame rx =
      apply_channel(frame, traj, unit_gains(1, 1), 0.01, rng);
  ReceivedFrame rot = rx;
  const double phi = 0.35;
  for (auto& s : rot.r) s *= std::polar(1.0, phi);
  SmootherParams params{s2, 0.0, false};
  const PhasePosterior a =
      smooth_phases(rx, pilot_soft(frame), params, frame.pilot_mask);
  const PhasePosterior b =
      smooth_phases(rot, pilot_soft(frame), params, frame.pilot_mask);
  for (int k = 5; k < L; ++k) {
    const double d =
        circular_distance(b.theta(k, 0, 0), a.theta(k, 0, 0) + phi);
    CHECK(std::abs(d) < 0.2 * kDeg);
  }
}

TEST_CASE("belief soft symbols come from the cached marginals") {
  const Constellation c = Constellation::bpsk();
  JointSymbolBelief b;
  b.n_tx = 1;
  b.m = 2;
  b.log_pmf = {std::log(0.9), std::log(0.1)};
  b.normalize_and_cache();
  const std::vector<SoftSymbol> s = belief_soft_symbols(b, c);
  REQUIRE(s.size() == 1);
  CHECK(s[0].mean.real() ==
        doctest::Approx(0.9 * c.points[0].real() + 0.1 * c.points[1].real()));
  CHECK(s[0].var == doctest::Approx(1.0 - std::norm(s[0].mean)).epsilon(1e-9));
}
