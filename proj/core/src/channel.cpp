#include "phasync/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace phasync {

Constellation Constellation::bpsk() {
  Constellation c;
  c.name = "bpsk";
  c.points = {cplx{1.0, 0.0}, cplx{-1.0, 0.0}};
  c.bit_labels = {{0}, {1}};
  c.bits_per_symbol = 1;
  return c;
}

Constellation Constellation::qpsk() {
  Constellation c;
  c.name = "qpsk";
  const double s = 1.0 / std::sqrt(2.0);
  // Gray labeling: one bit per I/Q rail.
  c.points = {cplx{s, s}, cplx{-s, s}, cplx{-s, -s}, cplx{s, -s}};
  c.bit_labels = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  c.bits_per_symbol = 2;
  return c;
}

Constellation Constellation::qam16() {
  Constellation c;
  c.name = "16qam";
  const double s = 1.0 / std::sqrt(10.0);  // unit average energy
  const double levels[4] = {-3.0, -1.0, 1.0, 3.0};
  const int gray[4] = {0, 1, 3, 2};
  for (int i = 0; i < 4; ++i)
    for (int q = 0; q < 4; ++q) {
      c.points.push_back(cplx{levels[i] * s, levels[q] * s});
      c.bit_labels.push_back({(gray[i] >> 1) & 1, gray[i] & 1,
                              (gray[q] >> 1) & 1, gray[q] & 1});
    }
  c.bits_per_symbol = 4;
  return c;
}

Constellation Constellation::by_name(const std::string& name) {
  if (name == "bpsk") return bpsk();
  if (name == "qpsk") return qpsk();
  if (name == "16qam" || name == "qam16") return qam16();
  throw std::invalid_argument("unknown constellation: " + name);
}

int Constellation::index_of_bits(const std::vector<int>& bits) const {
  for (int i = 0; i < size(); ++i)
    if (bit_labels[i] == bits) return i;
  throw std::invalid_argument("bit pattern not found in constellation");
}

bool PilotPattern::is_pilot(int k) const {
  if (k < preamble_len) return true;
  if (period <= 0) return false;
  // Cycle layout: (period - burst_len) data then burst_len pilots.
  const int pos = (k - preamble_len) % period;
  return pos >= period - burst_len;
}

int PilotPattern::pilot_count(int L) const {
  int n = 0;
  for (int k = 0; k < L; ++k)
    if (is_pilot(k)) ++n;
  return n;
}

PilotPattern PilotPattern::preamble_only(int len) { return {len, 0, 0}; }

PilotPattern PilotPattern::one_in_twenty(int preamble) { return {preamble, 21, 1}; }

PilotPattern PilotPattern::five_in_hundred(int preamble) { return {preamble, 100, 5}; }

PilotPattern PilotPattern::all_pilots() { return {0, 1, 1}; }

PilotPattern PilotPattern::by_name(const std::string& name) {
  if (name == "1/20") return one_in_twenty();
  if (name == "5/100") return five_in_hundred();
  if (name == "all") return all_pilots();
  if (name == "none") return preamble_only(0);
  // "preamble/period/burst"
  int a = 0, b = 0, c = 0;
  if (std::sscanf(name.c_str(), "%d/%d/%d", &a, &b, &c) == 3)
    return {a, b, c};
  throw std::invalid_argument("unknown pilot pattern: " + name);
}

int Frame::data_count() const {
  int n = 0;
  for (int k = 0; k < L; ++k)
    if (!is_pilot(k)) ++n;
  return n;
}

PhaseTrajectory sample_phase_trajectories(int L, int n_tx, int n_rx,
                                          double sigma2_t, double sigma2_r,
                                          Rng& rng) {
  if (L < 1) throw std::invalid_argument("frame length must be >= 1");
  if (sigma2_t < 0.0 || sigma2_r < 0.0)
    throw std::invalid_argument("phase increment variance must be >= 0");

  PhaseTrajectory tr;
  tr.L = L;
  tr.n_tx = n_tx;
  tr.n_rx = n_rx;
  tr.theta_t.resize(static_cast<std::size_t>(L) * n_tx);
  tr.theta_r.resize(static_cast<std::size_t>(L) * n_rx);

  std::uniform_real_distribution<double> uni(0.0, kTwoPi);
  std::normal_distribution<double> dt(0.0, std::sqrt(sigma2_t));
  std::normal_distribution<double> dr(0.0, std::sqrt(sigma2_r));

  for (int m = 0; m < n_tx; ++m) tr.theta_t[m] = uni(rng);
  for (int n = 0; n < n_rx; ++n) tr.theta_r[n] = uni(rng);
  for (int k = 1; k < L; ++k) {
    for (int m = 0; m < n_tx; ++m)
      tr.theta_t[static_cast<std::size_t>(k) * n_tx + m] =
          tr.theta_t[static_cast<std::size_t>(k - 1) * n_tx + m] +
          (sigma2_t > 0.0 ? dt(rng) : 0.0);
    for (int n = 0; n < n_rx; ++n)
      tr.theta_r[static_cast<std::size_t>(k) * n_rx + n] =
          tr.theta_r[static_cast<std::size_t>(k - 1) * n_rx + n] +
          (sigma2_r > 0.0 ? dr(rng) : 0.0);
  }
  return tr;
}

cplx pilot_symbol(const Constellation& c, int k, int m) {
  // Fixed published pseudo-random sequence, one stream per antenna.
  Rng rng(kPilotSequenceSeed ^ (0x100000001b3ull * static_cast<uint64_t>(m + 1)) ^
          static_cast<uint64_t>(k) * 0xd1342543de82ef95ull);
  std::uniform_int_distribution<int> pick(0, c.size() - 1);
  return c.points[pick(rng)];
}

Frame build_frame(const std::vector<int>& bits, const Constellation& c,
                  const PilotPattern& pattern, int L, int n_tx) {
  Frame f;
  f.L = L;
  f.n_tx = n_tx;
  f.constellation = c;
  f.symbols.resize(static_cast<std::size_t>(L) * n_tx);
  f.pilot_mask.resize(L);
  for (int k = 0; k < L; ++k) f.pilot_mask[k] = pattern.is_pilot(k) ? 1 : 0;

  const int data_positions = f.data_count();
  const std::size_t need =
      static_cast<std::size_t>(data_positions) * n_tx * c.bits_per_symbol;
  if (bits.size() != need)
    throw std::invalid_argument("build_frame: payload has " +
                                std::to_string(bits.size()) + " bits, need " +
                                std::to_string(need));
  f.payload_bits = bits;

  std::size_t bit_pos = 0;
  std::vector<int> label(c.bits_per_symbol);
  for (int k = 0; k < L; ++k)
    for (int m = 0; m < n_tx; ++m) {
      if (f.is_pilot(k)) {
        f.symbols[static_cast<std::size_t>(k) * n_tx + m] = pilot_symbol(c, k, m);
      } else {
        for (int b = 0; b < c.bits_per_symbol; ++b) label[b] = bits[bit_pos++];
        f.symbols[static_cast<std::size_t>(k) * n_tx + m] =
            c.points[c.index_of_bits(label)];
      }
    }
  return f;
}

std::vector<int> random_payload_bits(const Constellation& c,
                                     const PilotPattern& pattern, int L,
                                     int n_tx, Rng& rng) {
  int data_positions = 0;
  for (int k = 0; k < L; ++k)
    if (!pattern.is_pilot(k)) ++data_positions;
  std::vector<int> bits(static_cast<std::size_t>(data_positions) * n_tx *
                        c.bits_per_symbol);
  std::uniform_int_distribution<int> bit(0, 1);
  for (auto& b : bits) b = bit(rng);
  return bits;
}

std::vector<cplx> rayleigh_gains(int n_tx, int n_rx, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::vector<cplx> h(static_cast<std::size_t>(n_tx) * n_rx);
  for (auto& v : h) v = cplx{g(rng), g(rng)};
  return h;
}

std::vector<cplx> unit_gains(int n_tx, int n_rx) {
  return std::vector<cplx>(static_cast<std::size_t>(n_tx) * n_rx, cplx{1.0, 0.0});
}

ReceivedFrame apply_channel(const Frame& frame, const PhaseTrajectory& traj,
                            const std::vector<cplx>& gains, double n0,
                            Rng& rng) {
  if (traj.L != frame.L || traj.n_tx != frame.n_tx)
    throw std::invalid_argument("apply_channel: dimension mismatch");
  if (gains.size() != static_cast<std::size_t>(frame.n_tx) * traj.n_rx)
    throw std::invalid_argument("apply_channel: gain matrix mismatch");

  ReceivedFrame out;
  out.L = frame.L;
  out.n_rx = traj.n_rx;
  out.n_tx = frame.n_tx;
  out.gains = gains;
  out.n0 = n0;
  out.r.resize(static_cast<std::size_t>(frame.L) * traj.n_rx);

  // n0 is the total complex noise variance, split evenly across rails.
  std::normal_distribution<double> w(0.0, std::sqrt(n0 / 2.0));
  for (int k = 0; k < frame.L; ++k)
    for (int n = 0; n < traj.n_rx; ++n) {
      cplx acc{0.0, 0.0};
      for (int m = 0; m < frame.n_tx; ++m)
        acc += gains[static_cast<std::size_t>(m) * traj.n_rx + n] *
               frame.symbol(k, m) * std::polar(1.0, traj.link(k, m, n));
      if (n0 > 0.0) acc += cplx{w(rng), w(rng)};
      out.r[static_cast<std::size_t>(k) * traj.n_rx + n] = acc;
    }
  return out;
}

}  // namespace phasync
