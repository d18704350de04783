// Acceptance suite: one numbered criterion per invocation, one summary
// line on stdout, nonzero exit on failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "phasync/channel.hpp"
#include "phasync/detectors.hpp"
#include "phasync/harness.hpp"
#include "phasync/oracles.hpp"

using namespace phasync;

#ifndef PHASYNC_DATA_DIR
#define PHASYNC_DATA_DIR "data"
#endif

namespace {

int g_threads = std::max(1u, std::thread::hardware_concurrency());

double qfunc_2ebn0(double ebn0_db) {
  // Q(sqrt(2 Eb/N0)) = erfc(sqrt(Eb/N0)) / 2.
  return 0.5 * std::erfc(std::sqrt(std::pow(10.0, ebn0_db / 10.0)));
}

double mc_sigma(double p, long long n) {
  return n > 0 ? std::sqrt(std::max(p * (1.0 - p), 1e-300) / n) : 1.0;
}

// a <= b within 3 sigma of the combined Monte Carlo noise.
bool leq3(double pa, long long na, double pb, long long nb) {
  const double s = std::hypot(mc_sigma(pa, na), mc_sigma(pb, nb));
  return pa <= pb + 3.0 * s;
}

SimConfig base_config() {
  SimConfig cfg;
  cfg.pilots = "1/20";
  cfg.L = 1000;
  cfg.sigma_t_deg = 4.0;
  cfg.sigma_r_deg = 4.0;
  cfg.seed = 20240817;
  // Per-frame known Rayleigh gains: with the all-ones gain matrix the
  // spatial channel is rank-1 and multi-antenna detection is
  // ill-posed regardless of receiver.
  cfg.channel = "rayleigh-known";
  return cfg;
}

// Eb/N0 (dB) where the BER curve crosses `target`, by log-linear
// interpolation; NaN when the sweep does not bracket it.
double crossing_db(const std::vector<double>& db, const std::vector<double>& ber,
                   double target) {
  const double lt = std::log10(target);
  for (std::size_t i = 0; i + 1 < db.size(); ++i) {
    const double a = std::log10(std::max(ber[i], 1e-12));
    const double b = std::log10(std::max(ber[i + 1], 1e-12));
    if ((a - lt) * (b - lt) <= 0.0 && a != b)
      return db[i] + (db[i + 1] - db[i]) * (lt - a) / (b - a);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ResultRow point(SimConfig cfg, const std::string& det, double db, int idx) {
  return run_point(cfg, det, db, idx, g_threads);
}

bool oracle_pass(const std::string& name, std::string& detail) {
  const OracleReport rep = run_oracle(name);
  detail = rep.lines.empty() ? "" : rep.lines.front();
  for (std::size_t i = 1; i < rep.lines.size(); ++i)
    detail += "; " + rep.lines[i];
  return rep.passed;
}

// ---- criteria ------------------------------------------------------------

bool criterion1() {
  SimConfig cfg = base_config();
  cfg.n_tx = cfg.n_rx = 1;
  cfg.constellation = "bpsk";
  cfg.pilots = "none";
  cfg.channel = "unit";  // analytic reference assumes unit gain
  cfg.sigma_t_deg = cfg.sigma_r_deg = 0.0;
  cfg.min_bit_errors = 1 << 30;
  cfg.min_frame_errors = 1 << 30;
  cfg.max_frames = 1000;  // 10^6 bits
  bool ok = true;
  std::string detail;
  int idx = 0;
  for (double db : {4.0, 6.0, 8.0}) {
    const ResultRow r = point(cfg, "genie-spa-map", db, idx++);
    const double p = qfunc_2ebn0(db);
    const double dev = std::abs(r.ber - p) / mc_sigma(p, r.bits);
    ok = ok && r.bits >= 1000000 && dev <= 3.0;
    char buf[96];
    std::snprintf(buf, sizeof buf, " %.0fdB ber %.3e ref %.3e (%.1f sigma)",
                  db, r.ber, p, dev);
    detail += buf;
  }
  std::printf("criterion 1: %s —%s\n", ok ? "PASS" : "FAIL", detail.c_str());
  return ok;
}

struct Sweep22 {
  std::vector<double> db;
  std::vector<ResultRow> genie, spa, gauss, euc;
};

bool criterion2() {
  SimConfig cfg = base_config();
  cfg.n_tx = cfg.n_rx = 2;
  cfg.constellation = "bpsk";
  cfg.n_iters = 4;
  cfg.min_bit_errors = 2000;
  cfg.min_frame_errors = 1 << 30;
  cfg.max_frames = 4000;
  const std::vector<double> grid = {2, 4, 6, 8, 10};
  bool ok = true;
  std::vector<double> db_all, spa_ber, euc_ber;
  std::string detail;
  int idx = 0;
  for (double db : grid) {
    const ResultRow g = point(cfg, "genie-spa-map", db, idx);
    const ResultRow s = point(cfg, "spa-map", db, idx);
    const ResultRow ga = point(cfg, "gauss-map", db, idx);
    const ResultRow e = point(cfg, "euc-map", db, idx);
    ++idx;
    db_all.push_back(db);
    spa_ber.push_back(s.ber);
    euc_ber.push_back(e.ber);
    ok = ok && s.bit_errors >= 2000 && e.bit_errors >= 2000;
    ok = ok && leq3(g.ber, g.bits, s.ber, s.bits);
    ok = ok && leq3(s.ber, s.bits, e.ber, e.bits);
    ok = ok && leq3(ga.ber, ga.bits, e.ber, e.bits);
    char buf[128];
    std::snprintf(buf, sizeof buf, " %.0fdB[g %.1e s %.1e ga %.1e e %.1e]",
                  db, g.ber, s.ber, ga.ber, e.ber);
    detail += buf;
  }
  // One extension point so both curves bracket BER 1e-2 for the gap
  // interpolation (the Rayleigh diversity floor keeps the tracker
  // baseline above 1e-2 inside the ordering grid).
  cfg.min_bit_errors = 1000;
  const ResultRow s12 = point(cfg, "spa-map", 12.0, idx);
  const ResultRow e12 = point(cfg, "euc-map", 12.0, idx);
  db_all.push_back(12.0);
  spa_ber.push_back(s12.ber);
  euc_ber.push_back(e12.ber);
  const double gap = crossing_db(db_all, euc_ber, 1e-2) -
                     crossing_db(db_all, spa_ber, 1e-2);
  ok = ok && std::isfinite(gap) && gap >= 0.5;
  char buf[96];
  std::snprintf(buf, sizeof buf, " 12dB[s %.1e e %.1e]", s12.ber, e12.ber);
  detail += buf;
  std::printf("criterion 2: %s — gap at 1e-2: %.2f dB;%s\n",
              ok ? "PASS" : "FAIL", gap, detail.c_str());
  return ok;
}

bool criterion3() {
  SimConfig cfg = base_config();
  cfg.constellation = "bpsk";
  cfg.n_iters = 4;
  cfg.min_bit_errors = 1000;
  cfg.min_frame_errors = 1 << 30;
  cfg.max_frames = 3000;
  // The grid runs past the ordering region so both curves bracket BER
  // 1e-2 despite the Rayleigh diversity floor at 2x2.
  const std::vector<double> grid = {2, 4, 6, 8, 10, 12};
  double gaps[2] = {0, 0};
  bool ok = true;
  std::string detail;
  for (int sz = 0; sz < 2; ++sz) {
    cfg.n_tx = cfg.n_rx = sz == 0 ? 2 : 4;
    std::vector<double> spa_ber, euc_ber;
    int idx = 100 * (sz + 1);
    for (double db : grid) {
      spa_ber.push_back(point(cfg, "spa-map", db, idx).ber);
      euc_ber.push_back(point(cfg, "euc-map", db, idx).ber);
      char buf[96];
      std::snprintf(buf, sizeof buf, " %dx%d %.0fdB[s %.1e e %.1e]",
                    cfg.n_tx, cfg.n_tx, db, spa_ber.back(), euc_ber.back());
      detail += buf;
      ++idx;
    }
    gaps[sz] = crossing_db(grid, euc_ber, 1e-2) -
               crossing_db(grid, spa_ber, 1e-2);
    ok = ok && std::isfinite(gaps[sz]);
  }
  ok = ok && gaps[1] > gaps[0];
  std::printf("criterion 3: %s — gap at 1e-2: 2x2 %.2f dB, 4x4 %.2f dB;%s\n",
              ok ? "PASS" : "FAIL", gaps[0], gaps[1], detail.c_str());
  return ok;
}

bool criterion_oracle(int n, const std::vector<std::string>& names) {
  bool ok = true;
  std::string detail;
  for (const auto& name : names) {
    std::string d;
    const bool p = oracle_pass(name, d);
    ok = ok && p;
    if (!detail.empty()) detail += " | ";
    detail += name + ": " + (p ? "ok" : "FAILED") + " (" + d + ")";
  }
  std::printf("criterion %d: %s — %s\n", n, ok ? "PASS" : "FAIL",
              detail.c_str());
  return ok;
}

bool criterion6() {
  // Termwise VB == EUC at P = 0 on top of the quadrature oracle.
  Rng rng(616);
  const Constellation c = Constellation::qam16();
  const Frame frame = build_frame({}, c, PilotPattern::all_pilots(), 1, 2);
  const PhaseTrajectory traj = sample_phase_trajectories(1, 2, 1, 0.0, 0.0, rng);
  const ReceivedFrame rx = apply_channel(frame, traj, unit_gains(2, 1), 0.2, rng);
  PhasePosterior post;
  post.L = 1;
  post.n_tx = 2;
  post.n_rx = 1;
  post.theta_hat = {0.4, -0.9};
  post.cov = {Eigen::MatrixXd::Zero(2, 2)};
  const SymbolPrior prior = SymbolPrior::uniform(2, c.size());
  const JointSymbolBelief vb = vb_belief(rx, 0, post, c, prior);
  const JointSymbolBelief euc = euc_map_belief(rx, 0, post, c, prior);
  double worst = 0.0;
  for (int j = 0; j < vb.candidate_count(); ++j)
    worst = std::max(worst, std::abs(vb.log_pmf[j] - euc.log_pmf[j]));
  std::string d;
  const bool quad = oracle_pass("vb-vs-quadrature", d);
  const bool ok = quad && worst < 1e-12;
  std::printf(
      "criterion 6: %s — P=0 termwise max diff %.2e; vb-vs-quadrature %s (%s)\n",
      ok ? "PASS" : "FAIL", worst, quad ? "ok" : "FAILED", d.c_str());
  return ok;
}

// FER measurement for the coded runs.
ResultRow coded_point(SimConfig cfg, const std::string& det, double db,
                      int idx, int min_fe, long max_frames) {
  cfg.min_frame_errors = min_fe;
  cfg.min_bit_errors = 1 << 30;
  cfg.max_frames = max_frames;
  return run_point(cfg, det, db, idx, g_threads);
}

// Picks a waterfall operating point: lowest Eb/N0 where the probe FER
// drops below 0.75 but stays above 0.02.
double probe_waterfall(SimConfig cfg, const std::string& det,
                       const std::vector<double>& grid, int idx0) {
  int idx = idx0;
  for (double db : grid) {
    const ResultRow r = coded_point(cfg, det, db, idx++, 1 << 30, 60);
    if (r.fer <= 0.75 && r.fer >= 0.02) return db;
  }
  return grid.back();
}

bool criterion9() {
  SimConfig cfg = base_config();
  cfg.n_tx = 2;
  cfg.n_rx = 1;
  cfg.constellation = "bpsk";
  cfg.L = 1060;  // data capacity 1000 under both pilot layouts
  cfg.coded = true;
  cfg.code_path = std::string(PHASYNC_DATA_DIR) + "/ldpc_r12_n2000.alist";
  cfg.n_global = 2;

  cfg.pilots = "1/20";
  const double db = probe_waterfall(cfg, "euc-map", {2, 3, 4, 5, 6}, 900);

  double fer[2][2];  // [layout][detector], detectors {spa, euc}
  long long frames[2][2];
  bool ok = true;
  const char* layouts[2] = {"1/20", "5/100"};
  for (int lay = 0; lay < 2; ++lay) {
    cfg.pilots = layouts[lay];
    const ResultRow s = coded_point(cfg, "spa-map", db, 910 + lay, 200, 4000);
    const ResultRow e = coded_point(cfg, "euc-map", db, 910 + lay, 200, 4000);
    fer[lay][0] = s.fer;
    fer[lay][1] = e.fer;
    frames[lay][0] = s.frames;
    frames[lay][1] = e.frames;
    ok = ok && s.frame_errors + e.frame_errors >= 200;
    ok = ok && leq3(s.fer, s.frames, e.fer, e.frames);
  }
  // Pilot-thinning damage, as the FER ratio 5/100 over 1/20.
  const double spa_deg = fer[1][0] / std::max(fer[0][0], 1e-9);
  const double euc_deg = fer[1][1] / std::max(fer[0][1], 1e-9);
  ok = ok && euc_deg > spa_deg;
  std::printf(
      "criterion 9: %s — %.1fdB FER 1/20[spa %.3f euc %.3f] 5/100[spa %.3f "
      "euc %.3f]; thinning ratio spa %.2f euc %.2f\n",
      ok ? "PASS" : "FAIL", db, fer[0][0], fer[0][1], fer[1][0], fer[1][1],
      spa_deg, euc_deg);
  (void)frames;
  return ok;
}

bool criterion10() {
  SimConfig cfg = base_config();
  cfg.n_tx = 2;
  cfg.n_rx = 1;
  cfg.constellation = "16qam";

  // Uncoded SER comparison: the single-mode Tikhonov approximation
  // hurts SPA-MAP on 16-QAM.
  cfg.min_bit_errors = 2000;
  cfg.min_frame_errors = 1 << 30;
  cfg.max_frames = 400;
  const std::vector<double> grid = {16, 20, 24, 28};
  int better_g = 0, better_v = 0;
  std::string detail;
  int idx = 1000;
  for (double db : grid) {
    const ResultRow s = point(cfg, "spa-map", db, idx);
    const ResultRow g = point(cfg, "gauss-map", db, idx);
    const ResultRow v = point(cfg, "vb-map", db, idx);
    ++idx;
    if (g.ser <= s.ser) ++better_g;
    if (v.ser <= s.ser) ++better_v;
    char buf[96];
    std::snprintf(buf, sizeof buf, " %.0fdB[s %.2e g %.2e v %.2e]", db, s.ser,
                  g.ser, v.ser);
    detail += buf;
  }
  bool ok = better_g >= 2 && better_v >= 2;

  // Coded: decoder feedback restores the SPA advantage.
  cfg.coded = true;
  cfg.code_path = std::string(PHASYNC_DATA_DIR) + "/ldpc_r45_n2000.alist";
  cfg.L = 272;  // data capacity 250 symbols = 2000 coded bits
  cfg.n_global = 2;
  const double db = probe_waterfall(cfg, "gauss-map", {14, 16, 18, 20, 22}, 1100);
  const ResultRow s = coded_point(cfg, "spa-map", db, 1110, 200, 2500);
  bool coded_ok = true;
  char buf[160];
  std::snprintf(buf, sizeof buf, "; coded %.0fdB FER[spa %.3f", db, s.fer);
  std::string coded_detail = buf;
  for (const char* det : {"gauss-map", "vb-map", "euc-map"}) {
    const ResultRow o = coded_point(cfg, det, db, 1110, 200, 2500);
    coded_ok = coded_ok && leq3(s.fer, s.frames, o.fer, o.frames);
    std::snprintf(buf, sizeof buf, " %s %.3f", det, o.fer);
    coded_detail += buf;
  }
  coded_detail += "]";
  ok = ok && coded_ok;
  std::printf("criterion 10: %s —%s%s\n", ok ? "PASS" : "FAIL",
              detail.c_str(), coded_detail.c_str());
  return ok;
}

bool criterion11() {
  SimConfig cfg = base_config();
  cfg.n_tx = cfg.n_rx = 2;
  cfg.constellation = "bpsk";
  cfg.L = 200;
  cfg.ebn0_db = {4.0, 8.0};
  cfg.detectors = {"spa-map", "euc-map"};
  cfg.min_bit_errors = 50;
  cfg.min_frame_errors = 1 << 30;
  cfg.max_frames = 30;
  const SweepResult a = run_sweep(cfg, 1);
  const SweepResult b = run_sweep(cfg, 4);
  std::string csv_a = csv_header(), csv_b = csv_header();
  for (const auto& r : a.rows) csv_a += csv_row(r);
  for (const auto& r : b.rows) csv_b += csv_row(r);
  const bool ok = csv_a == csv_b && !a.rows.empty();
  std::printf("criterion 11: %s — %zu rows, 1-thread vs 4-thread CSV %s\n",
              ok ? "PASS" : "FAIL", a.rows.size(),
              csv_a == csv_b ? "identical" : "DIFFER");
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <criterion 1..11>\n", argv[0]);
    return 2;
  }
  const int n = std::atoi(argv[1]);
  bool ok = false;
  switch (n) {
    case 1: ok = criterion1(); break;
    case 2: ok = criterion2(); break;
    case 3: ok = criterion3(); break;
    case 4: ok = criterion_oracle(4, {"spa-vs-grid"}); break;
    case 5: ok = criterion_oracle(5, {"gaussmap-vs-grid"}); break;
    case 6: ok = criterion6(); break;
    case 7: ok = criterion_oracle(7, {"utilde-residual"}); break;
    case 8: ok = criterion_oracle(8, {"i0-accuracy", "tikhonov-norm",
                                      "smear-vs-grid"}); break;
    case 9: ok = criterion9(); break;
    case 10: ok = criterion10(); break;
    case 11: ok = criterion11(); break;
    default:
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
  }
  return ok ? 0 : 1;
}
