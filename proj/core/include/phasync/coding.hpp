#pragma once

// Coded path: alist parity-check matrices, sum-product decoding,
// bit-LLR extraction from symbol beliefs, extrinsic symbol priors, and
// the detector <-> decoder turbo loop.

#include <cstdint>
#include <string>
#include <vector>

#include "phasync/detectors.hpp"

namespace phasync {

/// Sparse binary parity-check matrix with adjacency lists.
struct ParityCheckMatrix {
  int n = 0;  // columns (code length)
  int m = 0;  // rows (checks)
  std::vector<std::vector<int>> col_adj;  // checks per variable
  std::vector<std::vector<int>> row_adj;  // variables per check
  int rank = 0;                           // GF(2) rank, computed at load

  int dimension() const { return n - rank; }
  bool syndrome_zero(const std::vector<int>& bits) const;
};

/// Parses the alist sparse-matrix format (1-indexed adjacency, zero
/// padding permitted). Throws std::runtime_error with a line number on
/// malformed input.
ParityCheckMatrix parse_alist(const std::string& text);
std::string serialize_alist(const ParityCheckMatrix& h);
ParityCheckMatrix load_alist_file(const std::string& path);

/// Systematic encoder built by GF(2) Gaussian elimination of H at load.
class LdpcEncoder {
public:
  explicit LdpcEncoder(const ParityCheckMatrix& h);

  int info_bits() const { return static_cast<int>(info_cols_.size()); }
  int code_length() const { return n_; }
  const std::vector<int>& info_positions() const { return info_cols_; }

  /// info bits -> length-n codeword with H c^T = 0.
  std::vector<int> encode(const std::vector<int>& info) const;

private:
  int n_ = 0;
  std::vector<int> info_cols_;
  std::vector<int> pivot_cols_;
  // Reduced rows: parity bit of pivot_cols_[i] = XOR of info bits in
  // parity_deps_[i].
  std::vector<std::vector<int>> parity_deps_;
};

constexpr double kLlrClamp = 50.0;

struct BpResult {
  std::vector<int> hard_bits;
  std::vector<double> posterior_llrs;
  bool converged = false;
  int iterations = 0;
};

/// Flooding-schedule sum-product (tanh rule). Stops on zero syndrome.
/// LLR convention: positive favors bit 0.
BpResult bp_decode(const std::vector<double>& llrs, const ParityCheckMatrix& h,
                   int max_iters = 50);

/// Seeded pseudo-random bit interleaver (bijection).
class Interleaver {
public:
  Interleaver(int size, uint64_t seed);
  int size() const { return static_cast<int>(perm_.size()); }
  /// out[i] = in[perm[i]]
  template <typename T>
  std::vector<T> apply(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[i] = in[perm_[i]];
    return out;
  }
  template <typename T>
  std::vector<T> invert(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = in[i];
    return out;
  }

private:
  std::vector<int> perm_;
};

/// Per-bit LLRs at data positions from the per-antenna belief
/// marginals, clamped to +/- kLlrClamp. Bit order is (k, antenna, bit).
std::vector<double> belief_to_bit_llrs(const std::vector<JointSymbolBelief>& beliefs,
                                       const Frame& frame);

/// Independent-bit product priors from LLRs (same bit order).
std::vector<SymbolPrior> llrs_to_symbol_priors(const std::vector<double>& llrs,
                                               const Frame& frame);

struct TurboParams {
  DetectorKind kind = DetectorKind::SpaMap;
  SpaParams spa;
  IterateParams eks;
  int n_global = 2;
  int bp_iters = 50;
  uint64_t interleaver_seed = 0x5eed1e7fULL;
};

struct TurboResult {
  std::vector<int> decoded_info;
  std::vector<int> decoded_codeword;
  bool converged = false;
};

/// Builds the coded frame for a codeword (bits interleaved across data
/// positions only) and the matching payload bit stream.
std::vector<int> interleave_codeword(const std::vector<int>& codeword,
                                     const Interleaver& pi);

/// Detector <-> decoder loop: n_global rounds of detection with the
/// current extrinsic priors followed by sum-product decoding. Final
/// hard decisions come from the decoder posteriors.
TurboResult turbo_run(const ReceivedFrame& rx, const Frame& frame,
                      const ParityCheckMatrix& h, const LdpcEncoder& enc,
                      const TurboParams& params);

/// Seeded PEG-flavored construction of a column-weight-3 regular code
/// with m = n (1 - rate) checks. rate must divide cleanly.
ParityCheckMatrix generate_ldpc(int n, double rate, uint64_t seed);

}  // namespace phasync
