#pragma once

// Monte Carlo engine: JSON configuration, seeded reproducible sweeps
// over E_b/N_0 x detector, error counting with Wilson intervals, CSV
// plus metadata output. CSV bytes are independent of the worker count.

#include <cstdint>
#include <string>
#include <vector>

#include "phasync/coding.hpp"

namespace phasync {

struct SimConfig {
  int n_tx = 2;
  int n_rx = 2;
  std::string constellation = "bpsk";
  std::string pilots = "1/20";
  int L = 1000;
  double sigma_t_deg = 4.0;
  double sigma_r_deg = 4.0;
  std::vector<double> ebn0_db;
  std::vector<std::string> detectors;
  std::string channel = "unit";  // unit | rayleigh-known
  bool coded = false;
  std::string code_path;
  int n_global = 2;   // detector <-> decoder rounds (coded)
  int n_iters = 2;    // smoother <-> detector rounds (uncoded)
  int min_frame_errors = 200;
  int min_bit_errors = 2000;
  long max_frames = 100000;
  uint64_t seed = 1;

  double sigma2_t() const;  // rad^2 per step
  double sigma2_r() const;

  /// Parse + validate. Throws std::runtime_error naming the bad field.
  static SimConfig parse(const std::string& json_text);
  static SimConfig load_file(const std::string& path);
  /// Canonical serialization (also the hashed metadata payload).
  std::string to_json() const;
};

struct ResultRow {
  std::string detector;
  double ebn0_db = 0.0;
  long long bits = 0, bit_errors = 0;
  long long symbols = 0, symbol_errors = 0;
  long long frames = 0, frame_errors = 0;
  double ber = 0.0, ser = 0.0, fer = 0.0;
  double ber_lo = 0.0, ber_hi = 0.0;
  double fer_lo = 0.0, fer_hi = 0.0;
  bool partial = false;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  double wall_seconds = 0.0;
};

/// 95% Wilson score interval for k successes in n trials.
struct WilsonInterval {
  double lo = 0.0, hi = 0.0;
};
WilsonInterval wilson_interval(long long k, long long n, double z = 1.959963985);

/// Collision-resistant per-frame seed (splitmix64-style mixing); the
/// frame stream is identical for every worker layout.
uint64_t derive_frame_seed(uint64_t master_seed, long frame_index,
                           int point_index);

/// N_0 for a target E_b/N_0 given frame geometry (unit symbol energy
/// per antenna; pilot overhead and code rate charged to E_b).
double noise_variance_for_ebn0(double ebn0_db, int L, int data_positions,
                               int bits_per_symbol, double code_rate);

/// One (detector, E_b/N_0) point. point_index feeds the seed stream;
/// threads > 1 splits frames across workers without changing the
/// result.
ResultRow run_point(const SimConfig& config, const std::string& detector,
                    double ebn0_db, int point_index, int threads = 1);

/// Grid of detectors x ebn0_db, rows sorted by (detector, ebn0).
SweepResult run_sweep(const SimConfig& config, int threads = 1);

std::string csv_header();
std::string csv_row(const ResultRow& row);
void write_csv(const SweepResult& result, const std::string& path);
/// Sidecar next to `csv_path` (suffix .meta.json): config echo + hash,
/// seed, pilot sequence seed, git revision, wall time, the E_b/N_0
/// accounting formula.
void write_metadata(const SimConfig& config, const SweepResult& result,
                    const std::string& csv_path);

uint64_t fnv1a64(const std::string& data);
std::string git_revision();

}  // namespace phasync
