#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "phasync/coding.hpp"

using namespace phasync;

namespace {
// Standard Hamming(7,4) parity-check matrix, rows of weight 4.
const char* kHammingAlist =
    "7 3\n3 4\n3 2 2 1 2 1 1\n4 4 4\n"
    "1 2 3\n1 2 0\n1 3 0\n1 0 0\n2 3 0\n2 0 0\n3 0 0\n"
    "1 2 3 4\n1 2 5 6\n1 3 5 7\n";

ParityCheckMatrix hamming() {
  // Build H = [1110100; 1101010; 1011001] directly.
  ParityCheckMatrix h;
  h.n = 7;
  h.m = 3;
  h.row_adj = {{0, 1, 2, 3}, {0, 1, 4, 5}, {0, 2, 4, 6}};
  h.col_adj.assign(7, {});
  for (int r = 0; r < 3; ++r)
    for (int v : h.row_adj[r]) h.col_adj[v].push_back(r);
  h.rank = 3;
  return h;
}
}  // namespace

TEST_CASE("alist round-trip") {
  const ParityCheckMatrix h = hamming();
  const std::string text = serialize_alist(h);
  const ParityCheckMatrix back = parse_alist(text);
  CHECK(back.n == 7);
  CHECK(back.m == 3);
  CHECK(back.rank == 3);
  CHECK(back.dimension() == 4);
  for (int r = 0; r < 3; ++r) CHECK(back.row_adj[r] == h.row_adj[r]);
  CHECK(serialize_alist(back) == text);
  // Zero padding in adjacency rows is accepted.
  const ParityCheckMatrix padded = parse_alist(kHammingAlist);
  CHECK(padded.n == 7);
  CHECK(padded.m == 3);
  for (int v = 0; v < 7; ++v) {
    int w = 0;
    for (int r = 0; r < 3; ++r)
      w += std::count(padded.row_adj[r].begin(), padded.row_adj[r].end(), v);
    CHECK(w == static_cast<int>(padded.col_adj[v].size()));
  }
  CHECK_THROWS_AS(parse_alist("7 3\n3 3\n1 1"), std::runtime_error);
  CHECK_THROWS_AS(parse_alist(""), std::runtime_error);
}

TEST_CASE("systematic encoder satisfies every check") {
  const ParityCheckMatrix h = hamming();
  const LdpcEncoder enc(h);
  CHECK(enc.code_length() == 7);
  CHECK(enc.info_bits() == 4);
  for (int v = 0; v < 16; ++v) {
    std::vector<int> info(4);
    for (int b = 0; b < 4; ++b) info[b] = (v >> b) & 1;
    const std::vector<int> cw = enc.encode(info);
    REQUIRE(static_cast<int>(cw.size()) == 7);
    CHECK(h.syndrome_zero(cw));
    // Systematic: info bits appear at the info positions.
    for (int b = 0; b < 4; ++b) CHECK(cw[enc.info_positions()[b]] == info[b]);
  }
}

TEST_CASE("sum-product decoding") {
  const ParityCheckMatrix h = hamming();
  const LdpcEncoder enc(h);
  const std::vector<int> cw = enc.encode({1, 0, 1, 1});

  // Noiseless LLRs decode instantly.
  std::vector<double> llr(7);
  for (int i = 0; i < 7; ++i) llr[i] = cw[i] ? -kLlrClamp : kLlrClamp;
  const BpResult clean = bp_decode(llr, h);
  CHECK(clean.converged);
  CHECK(clean.hard_bits == cw);
  CHECK(clean.iterations == 0);

  // Every single moderately-wrong bit is corrected. Magnitudes stay in
  // the regime where the check extrinsics (capped by the internal atanh
  // clamp) can outvote the bad channel value.
  for (int flip = 0; flip < 7; ++flip) {
    std::vector<double> noisy(7);
    for (int i = 0; i < 7; ++i) noisy[i] = cw[i] ? -9.0 : 9.0;
    noisy[flip] = -0.4 * noisy[flip];
    const BpResult fixed = bp_decode(noisy, h);
    CHECK(fixed.converged);
    CHECK(fixed.hard_bits == cw);
  }

  // All-zero LLRs hard-decide to the all-zero codeword, which already
  // satisfies every check.
  const BpResult zero = bp_decode(std::vector<double>(7, 0.0), h, 30);
  CHECK(zero.converged);
  CHECK(zero.hard_bits == std::vector<int>(7, 0));

  // Inconsistent noise inputs: the converged flag always mirrors the
  // syndrome, and giving up happens only at the iteration cap.
  Rng nrng(97);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool saw_stuck = false;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> noise(7);
    for (double& x : noise) x = gauss(nrng);
    const BpResult r = bp_decode(noise, h, 5);
    CHECK(r.converged == h.syndrome_zero(r.hard_bits));
    if (!r.converged) {
      CHECK(r.iterations == 5);
      saw_stuck = true;
    }
  }
  CHECK(saw_stuck);
}

TEST_CASE("interleaver is a seeded bijection") {
  const Interleaver pi(257, 0xfeedULL);
  std::vector<int> x(257);
  for (int i = 0; i < 257; ++i) x[i] = i;
  const std::vector<int> y = pi.apply(x);
  CHECK(pi.invert(y) == x);
  std::vector<int> seen(257, 0);
  for (int v : y) seen[v] += 1;
  for (int c : seen) CHECK(c == 1);
  // Same seed, same permutation; different seed, different one.
  const Interleaver pi2(257, 0xfeedULL);
  CHECK(pi2.apply(x) == y);
  const Interleaver pi3(257, 0xbeefULL);
  CHECK(pi3.apply(x) != y);
}

TEST_CASE("bit llrs from beliefs") {
  const Constellation c = Constellation::bpsk();
  const PilotPattern pattern{1, 4, 1};
  const int L = 5;
  Rng rng(1);
  const Frame frame =
      build_frame(random_payload_bits(c, pattern, L, 1, rng), c, pattern, L, 1);

  std::vector<JointSymbolBelief> beliefs(L);
  for (int k = 0; k < L; ++k) {
    beliefs[k].n_tx = 1;
    beliefs[k].m = 2;
    beliefs[k].log_pmf = {std::log(0.5), std::log(0.5)};
    beliefs[k].normalize_and_cache();
  }
  // One data position carries pmf (0.9, 0.1).
  int kd = -1;
  for (int k = 0; k < L; ++k)
    if (!frame.is_pilot(k)) { kd = k; break; }
  REQUIRE(kd >= 0);
  beliefs[kd].log_pmf = {std::log(0.9), std::log(0.1)};
  beliefs[kd].normalize_and_cache();

  const std::vector<double> llrs = belief_to_bit_llrs(beliefs, frame);
  CHECK(static_cast<int>(llrs.size()) == frame.data_count());
  // Position kd is the first data position; bit 0 maps to point 0.
  const double expect =
      (c.index_of_bits({0}) == 0 ? 1.0 : -1.0) * std::log(9.0);
  CHECK(llrs[0] == doctest::Approx(expect).epsilon(1e-9));
  for (std::size_t i = 1; i < llrs.size(); ++i)
    CHECK(llrs[i] == doctest::Approx(0.0));
}

TEST_CASE("llr to prior round trip for BPSK") {
  const Constellation c = Constellation::bpsk();
  const PilotPattern pattern{0, 1000, 0};
  const int L = 6;
  Rng rng(2);
  const Frame frame =
      build_frame(random_payload_bits(c, pattern, L, 1, rng), c, pattern, L, 1);
  std::vector<double> llrs = {0.0, 1.7, -2.4, 0.3, -0.1, 5.0};
  const std::vector<SymbolPrior> priors = llrs_to_symbol_priors(llrs, frame);
  REQUIRE(priors.size() == static_cast<std::size_t>(L));
  // Zero LLR -> uniform prior.
  CHECK(priors[0].at(0, 0) == doctest::Approx(0.5));
  // Rebuilding LLRs from the priors recovers the inputs exactly.
  std::vector<JointSymbolBelief> beliefs(L);
  for (int k = 0; k < L; ++k) {
    beliefs[k].n_tx = 1;
    beliefs[k].m = 2;
    beliefs[k].log_pmf = {std::log(std::max(priors[k].at(0, 0), 1e-300)),
                          std::log(std::max(priors[k].at(0, 1), 1e-300))};
    beliefs[k].normalize_and_cache();
  }
  const std::vector<double> back = belief_to_bit_llrs(beliefs, frame);
  for (int i = 0; i < L; ++i)
    CHECK(back[i] == doctest::Approx(llrs[i]).epsilon(1e-9));
}

TEST_CASE("generated codes are regular, full sized, and reproducible") {
  for (double rate : {0.5, 0.8}) {
    const ParityCheckMatrix h = generate_ldpc(200, rate, 99);
    CHECK(h.n == 200);
    CHECK(h.m == static_cast<int>(200 * (1.0 - rate) + 0.5));
    for (const auto& col : h.col_adj) CHECK(col.size() == 3);
    CHECK(h.dimension() >= static_cast<int>(200 * rate));
    const ParityCheckMatrix h2 = generate_ldpc(200, rate, 99);
    CHECK(serialize_alist(h) == serialize_alist(h2));
    // The encoder built from it produces valid codewords.
    const LdpcEncoder enc(h);
    Rng rng(5);
    std::vector<int> info(enc.info_bits());
    for (int& b : info) b = static_cast<int>(rng() & 1);
    CHECK(h.syndrome_zero(enc.encode(info)));
  }
}

TEST_CASE("noiseless coded frame decodes perfectly") {
  // Zero phase noise, essentially noiseless channel: the turbo loop
  // returns the transmitted codeword for every detector kind.
  const ParityCheckMatrix h = generate_ldpc(120, 0.5, 7);
  const LdpcEncoder enc(h);
  const Constellation c = Constellation::bpsk();
  const PilotPattern pattern{4, 10, 1};

  Rng rng(6);
  std::vector<int> info(enc.info_bits());
  for (int& b : info) b = static_cast<int>(rng() & 1);
  const std::vector<int> cw = enc.encode(info);

  TurboParams params;
  params.spa = {0.0, 0.0};
  params.eks.smoother = {0.0, 0.0, false};
  const Interleaver pi(h.n, params.interleaver_seed);
  const std::vector<int> payload = interleave_codeword(cw, pi);

  // Smallest frame whose data capacity is exactly n coded bits.
  int use_l = h.n;
  for (int l = h.n; l < 2 * h.n; ++l) {
    int data = 0;
    for (int k = 0; k < l; ++k)
      if (!pattern.is_pilot(k)) ++data;
    if (data == h.n) { use_l = l; break; }
  }
  const Frame frame = build_frame(payload, c, pattern, use_l, 1);
  const PhaseTrajectory traj =
      sample_phase_trajectories(use_l, 1, 1, 0.0, 0.0, rng);
  const ReceivedFrame rx =
      apply_channel(frame, traj, unit_gains(1, 1), 1e-6, rng);

  for (DetectorKind kind : {DetectorKind::SpaMap, DetectorKind::EucMap}) {
    params.kind = kind;
    const TurboResult res = turbo_run(rx, frame, h, enc, params);
    CHECK(res.converged);
    CHECK(res.decoded_codeword == cw);
    CHECK(res.decoded_info == info);
  }
}
