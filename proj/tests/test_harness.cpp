#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "phasync/harness.hpp"

using namespace phasync;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallConfig = R"({
  "n_tx": 1, "n_rx": 1,
  "constellation": "bpsk",
  "pilots": "none",
  "L": 100,
  "sigma_t_deg": 0.0, "sigma_r_deg": 0.0,
  "ebn0_db": [6.0],
  "detectors": ["euc-map"],
  "min_frame_errors": 5, "min_bit_errors": 50,
  "max_frames": 24,
  "seed": 42
})";
}  // namespace

TEST_CASE("config parsing and validation") {
  const SimConfig cfg = SimConfig::parse(kSmallConfig);
  CHECK(cfg.n_tx == 1);
  CHECK(cfg.constellation == "bpsk");
  CHECK(cfg.L == 100);
  CHECK(cfg.ebn0_db.size() == 1);
  CHECK(cfg.seed == 42);
  CHECK(cfg.sigma2_t() == 0.0);

  // Round trip through the canonical serialization.
  const SimConfig back = SimConfig::parse(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());

  CHECK_THROWS_AS(SimConfig::parse("{\"L\": -5}"), std::runtime_error);
  CHECK_THROWS_AS(SimConfig::parse("{\"constellation\": \"pam8\"}"),
                  std::runtime_error);
  CHECK_THROWS_AS(SimConfig::parse("not json"), std::runtime_error);
  CHECK_THROWS_AS(SimConfig::parse("{\"detectors\": [\"warp-map\"]}"),
                  std::runtime_error);
}

TEST_CASE("wilson interval basics") {
  const WilsonInterval w = wilson_interval(50, 1000);
  CHECK(w.lo < 0.05);
  CHECK(w.hi > 0.05);
  CHECK(w.lo > 0.0);
  CHECK(w.hi < 1.0);
  const WilsonInterval zero = wilson_interval(0, 1000);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);
  const WilsonInterval empty = wilson_interval(0, 0);
  CHECK(empty.lo == 0.0);

  // Nominal coverage on a synthetic Bernoulli self-test.
  Rng rng(1234);
  std::binomial_distribution<long long> bin(400, 0.3);
  int cover = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const long long k = bin(rng);
    const WilsonInterval ci = wilson_interval(k, 400);
    cover += (ci.lo <= 0.3 && 0.3 <= ci.hi);
  }
  const double rate = static_cast<double>(cover) / trials;
  CHECK(rate > 0.94);
  CHECK(rate < 0.97);
}

TEST_CASE("frame seeds are deterministic and collision free") {
  CHECK(derive_frame_seed(1, 2, 3) == derive_frame_seed(1, 2, 3));
  CHECK(derive_frame_seed(1, 2, 3) != derive_frame_seed(1, 3, 2));
  std::set<uint64_t> seen;
  for (long f = 0; f < 200000; ++f) seen.insert(derive_frame_seed(99, f, 0));
  CHECK(seen.size() == 200000);
}

TEST_CASE("noise accounting charges pilots and code rate to Eb") {
  // Uncoded BPSK without pilots at 0 dB: N0 = 1.
  CHECK(noise_variance_for_ebn0(0.0, 100, 100, 1, 1.0) ==
        doctest::Approx(1.0));
  // Pilot overhead halves the data fraction: N0 doubles... inversely.
  CHECK(noise_variance_for_ebn0(0.0, 100, 50, 1, 1.0) ==
        doctest::Approx(2.0));
  // Rate-1/2 code at fixed Eb/N0 doubles N0 as well.
  CHECK(noise_variance_for_ebn0(0.0, 100, 100, 1, 0.5) ==
        doctest::Approx(2.0));
  // 2 bits per symbol halves it.
  CHECK(noise_variance_for_ebn0(0.0, 100, 100, 2, 1.0) ==
        doctest::Approx(0.5));
}

TEST_CASE("csv layout and determinism across worker counts") {
  const SimConfig cfg = SimConfig::parse(kSmallConfig);
  const SweepResult one = run_sweep(cfg, 1);
  const SweepResult four = run_sweep(cfg, 4);
  REQUIRE(one.rows.size() == 1);
  REQUIRE(four.rows.size() == 1);

  const std::string p1 = "/tmp/phasync_t1.csv";
  const std::string p4 = "/tmp/phasync_t4.csv";
  write_csv(one, p1);
  write_csv(four, p4);
  CHECK(slurp(p1) == slurp(p4));

  const ResultRow& row = one.rows[0];
  CHECK(row.detector == "euc-map");
  CHECK(row.bits > 0);
  CHECK(row.bit_errors <= row.bits);
  CHECK(row.frame_errors <= row.frames);
  CHECK(row.ber == doctest::Approx(static_cast<double>(row.bit_errors) /
                                   row.bits));
  CHECK(row.ber_lo <= row.ber);
  CHECK(row.ber_hi >= row.ber);

  // Header names every SweepResult column.
  const std::string head = csv_header();
  for (const char* col :
       {"detector", "ebn0_db", "bits", "bit_errors", "symbols",
        "symbol_errors", "frames", "frame_errors", "ber", "ser", "fer"})
    CHECK(head.find(col) != std::string::npos);

  // Re-running with the same seed reproduces the bytes.
  const SweepResult again = run_sweep(cfg, 2);
  write_csv(again, p4);
  CHECK(slurp(p1) == slurp(p4));

  // Metadata sidecar carries the config hash and seed.
  write_metadata(cfg, one, p1);
  const std::string meta = slurp(p1 + ".meta.json");
  CHECK(meta.find("config_hash") != std::string::npos);
  CHECK(meta.find("\"seed\"") != std::string::npos);
  CHECK(meta.find("pilot_sequence_seed") != std::string::npos);

  std::remove(p1.c_str());
  std::remove(p4.c_str());
  std::remove((p1 + ".meta.json").c_str());
}

TEST_CASE("coherent baseline point hits the analytic error rate") {
  // Genie messages with sigma = 0 pin the static phase exactly, so the
  // 6 dB BER must sit near Q(sqrt(2 Eb/N0)).
  SimConfig cfg = SimConfig::parse(kSmallConfig);
  cfg.max_frames = 300;
  cfg.min_bit_errors = 60;
  cfg.min_frame_errors = 1000000;  // stop on bit errors
  const ResultRow row = run_point(cfg, "genie-spa-map", 6.0, 0, 2);
  const double p = 0.5 * std::erfc(std::sqrt(std::pow(10.0, 0.6)));
  const double sigma = std::sqrt(p * (1.0 - p) / row.bits);
  CHECK(std::abs(row.ber - p) <= 3.0 * sigma + 1e-12);
}
