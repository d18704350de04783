#include "phasync/coding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace phasync {

namespace {

// Dense GF(2) rows packed into 64-bit words.
struct BitMatrix {
  int cols = 0;
  std::vector<std::vector<uint64_t>> rows;

  explicit BitMatrix(int n_rows, int n_cols)
      : cols(n_cols),
        rows(n_rows, std::vector<uint64_t>((n_cols + 63) / 64, 0)) {}

  void set(int r, int c) { rows[r][c >> 6] |= 1ull << (c & 63); }
  bool get(int r, int c) const { return (rows[r][c >> 6] >> (c & 63)) & 1; }
  void xor_rows(int dst, int src) {
    for (std::size_t w = 0; w < rows[dst].size(); ++w)
      rows[dst][w] ^= rows[src][w];
  }
};

BitMatrix to_bitmatrix(const ParityCheckMatrix& h) {
  BitMatrix bm(h.m, h.n);
  for (int r = 0; r < h.m; ++r)
    for (int v : h.row_adj[r]) bm.set(r, v);
  return bm;
}

// Row-reduce; returns pivot column per reduced row.
std::vector<int> rref(BitMatrix& bm) {
  std::vector<int> pivots;
  int row = 0;
  const int m = static_cast<int>(bm.rows.size());
  for (int col = 0; col < bm.cols && row < m; ++col) {
    int sel = -1;
    for (int r = row; r < m; ++r)
      if (bm.get(r, col)) { sel = r; break; }
    if (sel < 0) continue;
    std::swap(bm.rows[sel], bm.rows[row]);
    for (int r = 0; r < m; ++r)
      if (r != row && bm.get(r, col)) bm.xor_rows(r, row);
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace

bool ParityCheckMatrix::syndrome_zero(const std::vector<int>& bits) const {
  for (int r = 0; r < m; ++r) {
    int s = 0;
    for (int v : row_adj[r]) s ^= bits[v];
    if (s) return false;
  }
  return true;
}

ParityCheckMatrix parse_alist(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_ints = [&](int want_at_least) {
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::vector<int> vals;
      int v;
      while (ls >> v) vals.push_back(v);
      if (!vals.empty()) {
        if (static_cast<int>(vals.size()) < want_at_least)
          throw std::runtime_error("alist parse error at line " +
                                   std::to_string(line_no) + ": expected " +
                                   std::to_string(want_at_least) + " integers");
        return vals;
      }
    }
    throw std::runtime_error("alist parse error: truncated file after line " +
                             std::to_string(line_no));
  };

  ParityCheckMatrix h;
  auto dims = next_ints(2);
  h.n = dims[0];
  h.m = dims[1];
  if (h.n <= 0 || h.m <= 0)
    throw std::runtime_error("alist parse error at line " +
                             std::to_string(line_no) + ": bad dimensions");
  next_ints(2);  // max degrees, informational
  auto col_deg = next_ints(h.n);
  auto row_deg = next_ints(h.m);

  h.col_adj.resize(h.n);
  for (int v = 0; v < h.n; ++v) {
    auto adj = next_ints(1);
    for (int c : adj) {
      if (c == 0) continue;  // zero padding per the alist convention
      if (c < 1 || c > h.m)
        throw std::runtime_error("alist parse error at line " +
                                 std::to_string(line_no) +
                                 ": check index out of range");
      h.col_adj[v].push_back(c - 1);
    }
    if (static_cast<int>(h.col_adj[v].size()) != col_deg[v])
      throw std::runtime_error("alist parse error at line " +
                               std::to_string(line_no) +
                               ": column degree mismatch");
  }
  h.row_adj.resize(h.m);
  for (int r = 0; r < h.m; ++r) {
    auto adj = next_ints(1);
    for (int v : adj) {
      if (v == 0) continue;
      if (v < 1 || v > h.n)
        throw std::runtime_error("alist parse error at line " +
                                 std::to_string(line_no) +
                                 ": variable index out of range");
      h.row_adj[r].push_back(v - 1);
    }
    if (static_cast<int>(h.row_adj[r].size()) != row_deg[r])
      throw std::runtime_error("alist parse error at line " +
                               std::to_string(line_no) +
                               ": row degree mismatch");
  }

  // Cross-check adjacency consistency.
  std::vector<std::vector<int>> col_from_rows(h.n);
  for (int r = 0; r < h.m; ++r)
    for (int v : h.row_adj[r]) col_from_rows[v].push_back(r);
  for (int v = 0; v < h.n; ++v) {
    auto a = h.col_adj[v];
    auto b = col_from_rows[v];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
      throw std::runtime_error("alist parse error: row/column adjacency disagree at column " +
                               std::to_string(v + 1));
  }

  BitMatrix bm = to_bitmatrix(h);
  h.rank = static_cast<int>(rref(bm).size());
  return h;
}

std::string serialize_alist(const ParityCheckMatrix& h) {
  std::ostringstream out;
  out << h.n << " " << h.m << "\n";
  std::size_t max_col = 0, max_row = 0;
  for (const auto& a : h.col_adj) max_col = std::max(max_col, a.size());
  for (const auto& a : h.row_adj) max_row = std::max(max_row, a.size());
  out << max_col << " " << max_row << "\n";
  for (int v = 0; v < h.n; ++v)
    out << h.col_adj[v].size() << (v + 1 == h.n ? "\n" : " ");
  for (int r = 0; r < h.m; ++r)
    out << h.row_adj[r].size() << (r + 1 == h.m ? "\n" : " ");
  for (int v = 0; v < h.n; ++v) {
    auto a = h.col_adj[v];
    std::sort(a.begin(), a.end());
    for (std::size_t i = 0; i < max_col; ++i)
      out << (i < a.size() ? a[i] + 1 : 0) << (i + 1 == max_col ? "\n" : " ");
  }
  for (int r = 0; r < h.m; ++r) {
    auto a = h.row_adj[r];
    std::sort(a.begin(), a.end());
    for (std::size_t i = 0; i < max_row; ++i)
      out << (i < a.size() ? a[i] + 1 : 0) << (i + 1 == max_row ? "\n" : " ");
  }
  return out.str();
}

ParityCheckMatrix load_alist_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open alist file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_alist(ss.str());
}

LdpcEncoder::LdpcEncoder(const ParityCheckMatrix& h) : n_(h.n) {
  BitMatrix bm = to_bitmatrix(h);
  pivot_cols_ = rref(bm);
  std::vector<uint8_t> is_pivot(h.n, 0);
  for (int c : pivot_cols_) is_pivot[c] = 1;
  for (int c = 0; c < h.n; ++c)
    if (!is_pivot[c]) info_cols_.push_back(c);

  parity_deps_.resize(pivot_cols_.size());
  std::vector<int> info_index(h.n, -1);
  for (std::size_t i = 0; i < info_cols_.size(); ++i)
    info_index[info_cols_[i]] = static_cast<int>(i);
  for (std::size_t r = 0; r < pivot_cols_.size(); ++r)
    for (int c = 0; c < h.n; ++c)
      if (c != pivot_cols_[r] && bm.get(static_cast<int>(r), c))
        parity_deps_[r].push_back(info_index[c]);
}

std::vector<int> LdpcEncoder::encode(const std::vector<int>& info) const {
  if (static_cast<int>(info.size()) != info_bits())
    throw std::invalid_argument("encode: expected " + std::to_string(info_bits()) +
                                " info bits");
  std::vector<int> cw(n_, 0);
  for (std::size_t i = 0; i < info_cols_.size(); ++i) cw[info_cols_[i]] = info[i];
  for (std::size_t r = 0; r < pivot_cols_.size(); ++r) {
    int p = 0;
    for (int idx : parity_deps_[r]) p ^= info[idx];
    cw[pivot_cols_[r]] = p;
  }
  return cw;
}

BpResult bp_decode(const std::vector<double>& llrs, const ParityCheckMatrix& h,
                   int max_iters) {
  if (static_cast<int>(llrs.size()) != h.n)
    throw std::invalid_argument("bp_decode: LLR length mismatch");

  BpResult res;
  res.posterior_llrs = llrs;
  res.hard_bits.assign(h.n, 0);

  // Edge storage: messages indexed per (check, position in row).
  std::vector<std::vector<double>> c2v(h.m), v2c(h.m);
  for (int r = 0; r < h.m; ++r) {
    c2v[r].assign(h.row_adj[r].size(), 0.0);
    v2c[r].assign(h.row_adj[r].size(), 0.0);
  }
  // Per-variable list of (check, slot).
  std::vector<std::vector<std::pair<int, int>>> var_edges(h.n);
  for (int r = 0; r < h.m; ++r)
    for (std::size_t s = 0; s < h.row_adj[r].size(); ++s)
      var_edges[h.row_adj[r][s]].push_back({r, static_cast<int>(s)});

  auto clamp = [](double x) {
    return std::max(-kLlrClamp, std::min(kLlrClamp, x));
  };

  auto update_posteriors = [&]() {
    for (int v = 0; v < h.n; ++v) {
      double total = llrs[v];
      for (auto [r, s] : var_edges[v]) total += c2v[r][s];
      res.posterior_llrs[v] = clamp(total);
      res.hard_bits[v] = total < 0.0 ? 1 : 0;
    }
  };

  update_posteriors();
  if (h.syndrome_zero(res.hard_bits)) {
    res.converged = true;
    return res;
  }

  for (int it = 1; it <= max_iters; ++it) {
    // Variable to check.
    for (int v = 0; v < h.n; ++v) {
      double total = llrs[v];
      for (auto [r, s] : var_edges[v]) total += c2v[r][s];
      for (auto [r, s] : var_edges[v]) v2c[r][s] = clamp(total - c2v[r][s]);
    }
    // Check to variable, tanh rule with exclusion by partial products.
    for (int r = 0; r < h.m; ++r) {
      const int deg = static_cast<int>(h.row_adj[r].size());
      static thread_local std::vector<double> t, fwd, bwd;
      t.resize(deg);
      fwd.resize(deg + 1);
      bwd.resize(deg + 1);
      for (int s = 0; s < deg; ++s) t[s] = std::tanh(0.5 * v2c[r][s]);
      fwd[0] = 1.0;
      for (int s = 0; s < deg; ++s) fwd[s + 1] = fwd[s] * t[s];
      bwd[deg] = 1.0;
      for (int s = deg - 1; s >= 0; --s) bwd[s] = bwd[s + 1] * t[s];
      for (int s = 0; s < deg; ++s) {
        const double prod = fwd[s] * bwd[s + 1];
        c2v[r][s] = clamp(2.0 * std::atanh(std::max(-0.999999999999, std::min(0.999999999999, prod))));
      }
    }
    update_posteriors();
    res.iterations = it;
    if (h.syndrome_zero(res.hard_bits)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Interleaver::Interleaver(int size, uint64_t seed) : perm_(size) {
  for (int i = 0; i < size; ++i) perm_[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(perm_.begin(), perm_.end(), rng);
}

std::vector<double> belief_to_bit_llrs(const std::vector<JointSymbolBelief>& beliefs,
                                       const Frame& frame) {
  const Constellation& c = frame.constellation;
  std::vector<double> llrs;
  llrs.reserve(static_cast<std::size_t>(frame.data_count()) * frame.n_tx *
               c.bits_per_symbol);
  for (int k = 0; k < frame.L; ++k) {
    if (frame.is_pilot(k)) continue;
    const auto& b = beliefs[k];
    for (int ant = 0; ant < frame.n_tx; ++ant)
      for (int bit = 0; bit < c.bits_per_symbol; ++bit) {
        double p0 = 0.0, p1 = 0.0;
        for (int s = 0; s < c.size(); ++s) {
          if (c.bit_labels[s][bit] == 0)
            p0 += b.marginal(ant, s);
          else
            p1 += b.marginal(ant, s);
        }
        double llr = std::log(std::max(p0, 1e-300)) - std::log(std::max(p1, 1e-300));
        llrs.push_back(std::max(-kLlrClamp, std::min(kLlrClamp, llr)));
      }
  }
  return llrs;
}

std::vector<SymbolPrior> llrs_to_symbol_priors(const std::vector<double>& llrs,
                                               const Frame& frame) {
  const Constellation& c = frame.constellation;
  std::vector<SymbolPrior> priors;
  priors.reserve(frame.L);
  std::size_t pos = 0;
  for (int k = 0; k < frame.L; ++k) {
    if (frame.is_pilot(k)) {
      // Delta at the known pilot symbol.
      std::vector<int> idx(frame.n_tx);
      for (int m = 0; m < frame.n_tx; ++m) {
        const cplx s = frame.symbol(k, m);
        int best = 0;
        double bd = std::norm(s - c.points[0]);
        for (int i = 1; i < c.size(); ++i)
          if (std::norm(s - c.points[i]) < bd) { bd = std::norm(s - c.points[i]); best = i; }
        idx[m] = best;
      }
      priors.push_back(SymbolPrior::delta(frame.n_tx, c.size(), idx));
      continue;
    }
    SymbolPrior p = SymbolPrior::uniform(frame.n_tx, c.size());
    for (int ant = 0; ant < frame.n_tx; ++ant) {
      double norm = 0.0;
      for (int s = 0; s < c.size(); ++s) {
        double lp = 0.0;
        for (int bit = 0; bit < c.bits_per_symbol; ++bit) {
          const double l = llrs[pos + bit];
          // log P(bit) from the LLR, numerically stable.
          lp += c.bit_labels[s][bit] == 0 ? -std::log1p(std::exp(-l))
                                          : -std::log1p(std::exp(l));
        }
        p.at(ant, s) = std::exp(lp);
        norm += p.at(ant, s);
      }
      for (int s = 0; s < c.size(); ++s) p.at(ant, s) /= norm;
      pos += c.bits_per_symbol;
    }
    priors.push_back(std::move(p));
  }
  return priors;
}

std::vector<int> interleave_codeword(const std::vector<int>& codeword,
                                     const Interleaver& pi) {
  return pi.apply(codeword);
}

TurboResult turbo_run(const ReceivedFrame& rx, const Frame& frame,
                      const ParityCheckMatrix& h, const LdpcEncoder& enc,
                      const TurboParams& params) {
  const Constellation& c = frame.constellation;
  const int n_frame_bits =
      frame.data_count() * frame.n_tx * c.bits_per_symbol;
  if (n_frame_bits != h.n)
    throw std::invalid_argument("turbo_run: frame capacity != code length");
  Interleaver pi(h.n, params.interleaver_seed);

  std::vector<double> apriori_frame(h.n, 0.0);  // interleaved extrinsics
  BpResult dec;
  for (int g = 0; g < params.n_global; ++g) {
    std::vector<SymbolPrior> priors = llrs_to_symbol_priors(apriori_frame, frame);

    std::vector<JointSymbolBelief> beliefs;
    if (params.kind == DetectorKind::SpaMap ||
        params.kind == DetectorKind::GenieSpaMap) {
      beliefs = spa_map_run(rx, priors, c, params.spa);
    } else {
      beliefs = iterate(rx, params.kind, frame, priors, params.eks);
    }

    std::vector<double> post = belief_to_bit_llrs(beliefs, frame);
    std::vector<double> det_ext(h.n);
    for (int i = 0; i < h.n; ++i) {
      det_ext[i] = std::max(-kLlrClamp,
                            std::min(kLlrClamp, post[i] - apriori_frame[i]));
    }
    std::vector<double> ch_llrs = pi.invert(det_ext);
    dec = bp_decode(ch_llrs, h, params.bp_iters);
    if (g + 1 < params.n_global) {
      std::vector<double> dec_ext(h.n);
      for (int i = 0; i < h.n; ++i)
        dec_ext[i] = std::max(
            -kLlrClamp, std::min(kLlrClamp, dec.posterior_llrs[i] - ch_llrs[i]));
      apriori_frame = pi.apply(dec_ext);
    }
    if (dec.converged) break;
  }

  TurboResult out;
  out.converged = dec.converged;
  out.decoded_codeword = dec.hard_bits;
  out.decoded_info.reserve(enc.info_bits());
  for (int pos : enc.info_positions()) out.decoded_info.push_back(dec.hard_bits[pos]);
  return out;
}

ParityCheckMatrix generate_ldpc(int n, double rate, uint64_t seed) {
  const int m = static_cast<int>(std::lround(n * (1.0 - rate)));
  if (m < 4 || m >= n) throw std::invalid_argument("generate_ldpc: bad rate");
  constexpr int kColWeight = 3;

  ParityCheckMatrix h;
  h.n = n;
  h.m = m;
  h.col_adj.resize(n);
  h.row_adj.resize(m);

  std::mt19937_64 rng(seed);
  std::vector<int> check_deg(m, 0);

  for (int v = 0; v < n; ++v) {
    std::vector<uint8_t> used(m, 0);
    for (int e = 0; e < kColWeight; ++e) {
      // Candidates with minimum current degree, preferring checks that
      // do not close a 4-cycle with this column's earlier edges.
      int best = -1;
      int best_score = INT32_MAX;
      uint64_t best_tie = 0;
      for (int r = 0; r < m; ++r) {
        if (used[r]) continue;
        bool cycle4 = false;
        for (int prev : h.col_adj[v]) {
          for (int u : h.row_adj[prev]) {
            if (u == v) continue;
            if (std::find(h.col_adj[u].begin(), h.col_adj[u].end(), r) !=
                h.col_adj[u].end()) {
              cycle4 = true;
              break;
            }
          }
          if (cycle4) break;
        }
        const int score = check_deg[r] * 2 + (cycle4 ? 1000 : 0);
        const uint64_t tie = rng();
        if (score < best_score || (score == best_score && tie < best_tie)) {
          best_score = score;
          best_tie = tie;
          best = r;
        }
      }
      used[best] = 1;
      h.col_adj[v].push_back(best);
      h.row_adj[best].push_back(v);
      ++check_deg[best];
    }
  }
  for (auto& a : h.col_adj) std::sort(a.begin(), a.end());
  for (auto& a : h.row_adj) std::sort(a.begin(), a.end());

  BitMatrix bm = to_bitmatrix(h);
  h.rank = static_cast<int>(rref(bm).size());
  return h;
}

}  // namespace phasync
