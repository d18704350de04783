#pragma once

// Frame generation and the MIMO phase-noise channel: constellations,
// pilot layouts, per-oscillator Wiener phase trajectories, known
// Rayleigh gains, and the received-sample model.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "phasync/circmath.hpp"

namespace phasync {

using Rng = std::mt19937_64;

/// Unit-average-energy signal constellation with Gray bit labels.
struct Constellation {
  std::string name;
  std::vector<cplx> points;
  std::vector<std::vector<int>> bit_labels;  // one bit vector per point
  int bits_per_symbol = 0;

  static Constellation bpsk();
  static Constellation qpsk();
  static Constellation qam16();
  /// Lookup by name ("bpsk" | "qpsk" | "16qam"). Throws on unknown name.
  static Constellation by_name(const std::string& name);

  int size() const { return static_cast<int>(points.size()); }
  /// Index of the point whose bits match `bits` (MSB first).
  int index_of_bits(const std::vector<int>& bits) const;
};

/// Preamble of `preamble_len` pilot symbols, then repeating cycles of
/// (period - burst_len) data symbols followed by burst_len pilots.
struct PilotPattern {
  int preamble_len = 0;
  int period = 0;     // 0 disables periodic pilots
  int burst_len = 0;

  /// true if position k (0-based) carries pilots on all antennas.
  bool is_pilot(int k) const;
  /// Number of pilot positions in a frame of length L.
  int pilot_count(int L) const;

  static PilotPattern preamble_only(int len);
  /// The 1-every-20-data layout: preamble 10, period 21, burst 1.
  static PilotPattern one_in_twenty(int preamble = 10);
  /// 5 consecutive pilots every 100 symbols.
  static PilotPattern five_in_hundred(int preamble = 10);
  static PilotPattern all_pilots();
  /// Parse "preamble/period/burst", "1/20", "5/100", "all", or "none".
  static PilotPattern by_name(const std::string& name);
};

/// Ground-truth oscillator phase paths; theta_t is L x N_t, theta_r is
/// L x N_r, and the phase of link (m, n) at time k is their sum.
struct PhaseTrajectory {
  int L = 0, n_tx = 0, n_rx = 0;
  std::vector<double> theta_t;  // [L * n_tx], row-major in k
  std::vector<double> theta_r;  // [L * n_rx]

  double tx(int k, int m) const { return theta_t[static_cast<std::size_t>(k) * n_tx + m]; }
  double rx(int k, int n) const { return theta_r[static_cast<std::size_t>(k) * n_rx + n]; }
  double link(int k, int m, int n) const { return tx(k, m) + rx(k, n); }
};

/// Transmitted frame: L vector symbols over N_t antennas plus the pilot
/// mask and the payload bits mapped into the data positions.
struct Frame {
  int L = 0, n_tx = 0;
  std::vector<cplx> symbols;        // [L * n_tx]
  std::vector<uint8_t> pilot_mask;  // [L]
  std::vector<int> payload_bits;    // bits consumed at data positions
  Constellation constellation;

  cplx symbol(int k, int m) const { return symbols[static_cast<std::size_t>(k) * n_tx + m]; }
  bool is_pilot(int k) const { return pilot_mask[k] != 0; }
  int data_count() const;
};

/// Received samples r[k][n] plus the channel parameters the receivers
/// are allowed to know.
struct ReceivedFrame {
  int L = 0, n_rx = 0, n_tx = 0;
  std::vector<cplx> r;      // [L * n_rx]
  std::vector<cplx> gains;  // [n_tx * n_rx], known at the receiver
  double n0 = 0.0;          // total complex noise variance

  cplx sample(int k, int n) const { return r[static_cast<std::size_t>(k) * n_rx + n]; }
  cplx gain(int m, int n) const { return gains[static_cast<std::size_t>(m) * n_rx + n]; }
};

/// Independent Wiener paths per oscillator; initial phases uniform in
/// [0, 2pi), increments N(0, sigma2).
PhaseTrajectory sample_phase_trajectories(int L, int n_tx, int n_rx,
                                          double sigma2_t, double sigma2_r,
                                          Rng& rng);

/// Seed for the published pseudo-random pilot sequence; recorded in
/// sweep metadata so absolute curves are reproducible.
constexpr uint64_t kPilotSequenceSeed = 0x9e3779b97f4a7c15ull;

/// Pilot symbols for position k, antenna m (deterministic, independent
/// of the data RNG).
cplx pilot_symbol(const Constellation& c, int k, int m);

/// Maps payload bits into data positions (Gray labels) and places the
/// fixed pilot sequence at pilot positions. Throws if the bit count
/// does not match the data capacity.
Frame build_frame(const std::vector<int>& bits, const Constellation& c,
                  const PilotPattern& pattern, int L, int n_tx);

/// Random payload helper: draws exactly the bits build_frame needs.
std::vector<int> random_payload_bits(const Constellation& c,
                                     const PilotPattern& pattern, int L,
                                     int n_tx, Rng& rng);

/// i.i.d. unit-variance complex Gaussian gain matrix [n_tx * n_rx].
std::vector<cplx> rayleigh_gains(int n_tx, int n_rx, Rng& rng);
std::vector<cplx> unit_gains(int n_tx, int n_rx);

/// r_k^(n) = sum_m h^(m,n) c_k^(m) e^{j theta^(m,n)_k} + w, with w
/// complex Gaussian of total variance n0.
ReceivedFrame apply_channel(const Frame& frame, const PhaseTrajectory& traj,
                            const std::vector<cplx>& gains, double n0,
                            Rng& rng);

}  // namespace phasync
