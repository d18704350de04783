#include "phasync/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace phasync {

namespace {

constexpr double kDeg = M_PI / 180.0;

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

int nearest_point(const Constellation& c, cplx s) {
  int best = 0;
  double bd = std::norm(s - c.points[0]);
  for (int i = 1; i < c.size(); ++i) {
    const double d = std::norm(s - c.points[i]);
    if (d < bd) { bd = d; best = i; }
  }
  return best;
}

}  // namespace

double SimConfig::sigma2_t() const {
  return (sigma_t_deg * kDeg) * (sigma_t_deg * kDeg);
}
double SimConfig::sigma2_r() const {
  return (sigma_r_deg * kDeg) * (sigma_r_deg * kDeg);
}

SimConfig SimConfig::parse(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  SimConfig c;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) {
      try {
        dst = j.at(key).get<std::decay_t<decltype(dst)>>();
      } catch (const std::exception&) {
        throw std::runtime_error(std::string("config: bad value for '") + key + "'");
      }
    }
  };
  get("n_tx", c.n_tx);
  get("n_rx", c.n_rx);
  get("constellation", c.constellation);
  get("pilots", c.pilots);
  get("L", c.L);
  get("sigma_t_deg", c.sigma_t_deg);
  get("sigma_r_deg", c.sigma_r_deg);
  get("ebn0_db", c.ebn0_db);
  get("detectors", c.detectors);
  get("channel", c.channel);
  get("coded", c.coded);
  get("code_path", c.code_path);
  get("n_global", c.n_global);
  get("n_iters", c.n_iters);
  get("min_frame_errors", c.min_frame_errors);
  get("min_bit_errors", c.min_bit_errors);
  get("max_frames", c.max_frames);
  get("seed", c.seed);

  if (c.n_tx < 1 || c.n_rx < 1) throw std::runtime_error("config: n_tx/n_rx must be >= 1");
  if (c.L < 2) throw std::runtime_error("config: L must be >= 2");
  if (c.sigma_t_deg < 0.0 || c.sigma_r_deg < 0.0)
    throw std::runtime_error("config: sigma degrees must be >= 0");
  if (c.ebn0_db.empty()) throw std::runtime_error("config: ebn0_db must be non-empty");
  if (c.detectors.empty()) throw std::runtime_error("config: detectors must be non-empty");
  for (const auto& d : c.detectors) detector_by_name(d);  // throws on unknown
  Constellation::by_name(c.constellation);
  PilotPattern::by_name(c.pilots);
  if (c.channel != "unit" && c.channel != "rayleigh-known")
    throw std::runtime_error("config: channel must be 'unit' or 'rayleigh-known'");
  if (c.coded && c.code_path.empty())
    throw std::runtime_error("config: coded runs need code_path");
  if (c.n_global < 1 || c.n_iters < 1)
    throw std::runtime_error("config: iteration counts must be >= 1");
  if (c.max_frames < 1) throw std::runtime_error("config: max_frames must be >= 1");
  return c;
}

SimConfig SimConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string SimConfig::to_json() const {
  nlohmann::ordered_json j;
  j["n_tx"] = n_tx;
  j["n_rx"] = n_rx;
  j["constellation"] = constellation;
  j["pilots"] = pilots;
  j["L"] = L;
  j["sigma_t_deg"] = sigma_t_deg;
  j["sigma_r_deg"] = sigma_r_deg;
  j["ebn0_db"] = ebn0_db;
  j["detectors"] = detectors;
  j["channel"] = channel;
  j["coded"] = coded;
  j["code_path"] = code_path;
  j["n_global"] = n_global;
  j["n_iters"] = n_iters;
  j["min_frame_errors"] = min_frame_errors;
  j["min_bit_errors"] = min_bit_errors;
  j["max_frames"] = max_frames;
  j["seed"] = seed;
  return j.dump();
}

WilsonInterval wilson_interval(long long k, long long n, double z) {
  WilsonInterval w;
  if (n <= 0) return w;
  const double p = static_cast<double>(k) / n;
  const double z2n = z * z / n;
  const double center = (p + 0.5 * z2n) / (1.0 + z2n);
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n) / (1.0 + z2n);
  w.lo = std::max(0.0, center - half);
  w.hi = std::min(1.0, center + half);
  return w;
}

uint64_t derive_frame_seed(uint64_t master_seed, long frame_index,
                           int point_index) {
  uint64_t s = splitmix64(master_seed ^ splitmix64(0x706f696e74ull +
                                                   static_cast<uint64_t>(point_index)));
  return splitmix64(s ^ splitmix64(0x6672616d65ull + static_cast<uint64_t>(frame_index)));
}

double noise_variance_for_ebn0(double ebn0_db, int L, int data_positions,
                               int bits_per_symbol, double code_rate) {
  // Unit symbol energy per transmit antenna: frame energy per antenna is
  // L, info bits per antenna are data_positions * bits * rate.
  const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
  return static_cast<double>(L) /
         (static_cast<double>(data_positions) * bits_per_symbol * code_rate * ebn0);
}

namespace {

struct PointContext {
  const SimConfig* config = nullptr;
  DetectorKind kind = DetectorKind::SpaMap;
  Constellation c;
  PilotPattern pattern;
  double n0 = 0.0;
  // Coded path, shared across frames.
  std::shared_ptr<ParityCheckMatrix> h;
  std::shared_ptr<LdpcEncoder> enc;
  std::shared_ptr<Interleaver> pi;
};

struct FrameOutcome {
  long long bits = 0, bit_errors = 0;
  long long symbols = 0, symbol_errors = 0;
  bool frame_error = false;
};

FrameOutcome simulate_frame(const PointContext& ctx, uint64_t seed) {
  const SimConfig& cfg = *ctx.config;
  Rng rng(seed);

  const std::vector<cplx> gains =
      cfg.channel == "rayleigh-known" ? rayleigh_gains(cfg.n_tx, cfg.n_rx, rng)
                                      : unit_gains(cfg.n_tx, cfg.n_rx);

  std::vector<int> info;
  std::vector<int> payload;
  if (cfg.coded) {
    info.resize(ctx.enc->info_bits());
    std::uniform_int_distribution<int> bit(0, 1);
    for (int& b : info) b = bit(rng);
    payload = ctx.pi->apply(ctx.enc->encode(info));
  } else {
    payload = random_payload_bits(ctx.c, ctx.pattern, cfg.L, cfg.n_tx, rng);
  }
  const Frame frame = build_frame(payload, ctx.c, ctx.pattern, cfg.L, cfg.n_tx);

  const PhaseTrajectory traj = sample_phase_trajectories(
      cfg.L, cfg.n_tx, cfg.n_rx, cfg.sigma2_t(), cfg.sigma2_r(), rng);
  const ReceivedFrame rx = apply_channel(frame, traj, gains, ctx.n0, rng);

  FrameOutcome out;
  if (cfg.coded) {
    TurboParams tp;
    tp.kind = ctx.kind;
    tp.spa = SpaParams{cfg.sigma2_t(), cfg.sigma2_r()};
    tp.eks.smoother = SmootherParams{cfg.sigma2_t(), cfg.sigma2_r(), false};
    tp.eks.n_iters = cfg.n_iters;
    tp.n_global = cfg.n_global;
    const TurboResult res = turbo_run(rx, frame, *ctx.h, *ctx.enc, tp);

    out.bits = static_cast<long long>(info.size());
    for (std::size_t i = 0; i < info.size(); ++i)
      if (res.decoded_info[i] != info[i]) ++out.bit_errors;
    out.frame_error = out.bit_errors > 0;

    // Symbol errors from the re-mapped decoded codeword.
    const std::vector<int> decoded_payload = ctx.pi->apply(res.decoded_codeword);
    const int bps = ctx.c.bits_per_symbol;
    out.symbols = static_cast<long long>(frame.data_count()) * cfg.n_tx;
    for (long long s = 0; s < out.symbols; ++s) {
      bool bad = false;
      for (int b = 0; b < bps; ++b)
        if (decoded_payload[s * bps + b] != payload[s * bps + b]) bad = true;
      if (bad) ++out.symbol_errors;
    }
    return out;
  }

  std::vector<JointSymbolBelief> beliefs;
  const std::vector<SymbolPrior> priors = frame_priors(frame, false);
  const SpaParams sp{cfg.sigma2_t(), cfg.sigma2_r()};
  if (ctx.kind == DetectorKind::SpaMap) {
    // Decision-directed rounds: uniform data priors carry no phase
    // information into the Tikhonov messages (their mean symbol is
    // zero), so after the first pass the data priors are refreshed
    // from the posterior marginals and the messages recomputed.
    // Detection always weighs the beliefs against the original priors.
    // The refreshed priors are tempered toward uniform: feeding back raw
    // marginals locks early hard decisions in and re-confirms them.
    constexpr double kTemper = 0.25;
    const double uni = kTemper / ctx.c.size();
    std::vector<SymbolPrior> cur = priors;
    for (int it = 0; it < std::max(1, cfg.n_iters); ++it) {
      beliefs = spa_map_run(rx, cur, ctx.c, sp, &priors);
      if (it + 1 >= std::max(1, cfg.n_iters)) break;
      for (int k = 0; k < cfg.L; ++k) {
        if (frame.is_pilot(k)) continue;
        for (int m = 0; m < cfg.n_tx; ++m)
          for (int s = 0; s < ctx.c.size(); ++s)
            cur[k].at(m, s) =
                (1.0 - kTemper) * beliefs[k].marginal(m, s) + uni;
      }
    }
  } else if (ctx.kind == DetectorKind::GenieSpaMap) {
    const std::vector<SymbolPrior> genie = frame_priors(frame, true);
    beliefs = spa_map_run(rx, genie, ctx.c, sp, &priors);
  } else {
    IterateParams ip;
    ip.smoother = SmootherParams{cfg.sigma2_t(), cfg.sigma2_r(), false};
    ip.n_iters = cfg.n_iters;
    beliefs = iterate(rx, ctx.kind, frame, priors, ip);
  }

  const int bps = ctx.c.bits_per_symbol;
  for (int k = 0; k < cfg.L; ++k) {
    if (frame.is_pilot(k)) continue;
    const int j = beliefs[k].hard_decision();
    for (int ant = 0; ant < cfg.n_tx; ++ant) {
      const int got = beliefs[k].symbol_index(j, ant);
      const int want = nearest_point(ctx.c, frame.symbol(k, ant));
      ++out.symbols;
      out.bits += bps;
      if (got != want) {
        ++out.symbol_errors;
        for (int b = 0; b < bps; ++b)
          if (ctx.c.bit_labels[got][b] != ctx.c.bit_labels[want][b])
            ++out.bit_errors;
      }
    }
  }
  out.frame_error = out.bit_errors > 0;
  return out;
}

}  // namespace

ResultRow run_point(const SimConfig& config, const std::string& detector,
                    double ebn0_db, int point_index, int threads) {
  PointContext ctx;
  ctx.config = &config;
  ctx.kind = detector_by_name(detector);
  ctx.c = Constellation::by_name(config.constellation);
  ctx.pattern = PilotPattern::by_name(config.pilots);

  double rate = 1.0;
  const int data_positions = config.L - ctx.pattern.pilot_count(config.L);
  if (data_positions < 1)
    throw std::runtime_error("run_point: pilot layout leaves no data positions");
  if (config.coded) {
    ctx.h = std::make_shared<ParityCheckMatrix>(load_alist_file(config.code_path));
    ctx.enc = std::make_shared<LdpcEncoder>(*ctx.h);
    ctx.pi = std::make_shared<Interleaver>(ctx.h->n, TurboParams{}.interleaver_seed);
    const int capacity = data_positions * config.n_tx * ctx.c.bits_per_symbol;
    if (capacity != ctx.h->n)
      throw std::runtime_error("run_point: frame data capacity " +
                               std::to_string(capacity) + " != code length " +
                               std::to_string(ctx.h->n));
    rate = static_cast<double>(ctx.enc->info_bits()) / ctx.h->n;
  }
  ctx.n0 = noise_variance_for_ebn0(ebn0_db, config.L, data_positions,
                                   ctx.c.bits_per_symbol, rate);

  ResultRow row;
  row.detector = detector;
  row.ebn0_db = ebn0_db;

  constexpr int kChunk = 32;
  long frame_index = 0;
  while (frame_index < config.max_frames) {
    const int batch = static_cast<int>(
        std::min<long>(kChunk, config.max_frames - frame_index));
    std::vector<FrameOutcome> outcomes(batch);
    const int n_workers = std::max(1, std::min(threads, batch));
    if (n_workers == 1) {
      for (int i = 0; i < batch; ++i)
        outcomes[i] = simulate_frame(
            ctx, derive_frame_seed(config.seed, frame_index + i, point_index));
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> workers;
      workers.reserve(n_workers);
      for (int w = 0; w < n_workers; ++w)
        workers.emplace_back([&]() {
          for (int i = next.fetch_add(1); i < batch; i = next.fetch_add(1))
            outcomes[i] = simulate_frame(
                ctx, derive_frame_seed(config.seed, frame_index + i, point_index));
        });
      for (auto& t : workers) t.join();
    }
    // Ordered reduction keeps the counters worker-layout independent.
    for (const FrameOutcome& o : outcomes) {
      row.bits += o.bits;
      row.bit_errors += o.bit_errors;
      row.symbols += o.symbols;
      row.symbol_errors += o.symbol_errors;
      ++row.frames;
      if (o.frame_error) ++row.frame_errors;
    }
    frame_index += batch;
    if (row.frame_errors >= config.min_frame_errors ||
        row.bit_errors >= config.min_bit_errors)
      break;
  }

  row.partial = row.frame_errors < config.min_frame_errors &&
                row.bit_errors < config.min_bit_errors;
  row.ber = row.bits > 0 ? static_cast<double>(row.bit_errors) / row.bits : 0.0;
  row.ser =
      row.symbols > 0 ? static_cast<double>(row.symbol_errors) / row.symbols : 0.0;
  row.fer =
      row.frames > 0 ? static_cast<double>(row.frame_errors) / row.frames : 0.0;
  const WilsonInterval wb = wilson_interval(row.bit_errors, row.bits);
  const WilsonInterval wf = wilson_interval(row.frame_errors, row.frames);
  row.ber_lo = wb.lo;
  row.ber_hi = wb.hi;
  row.fer_lo = wf.lo;
  row.fer_hi = wf.hi;
  return row;
}

SweepResult run_sweep(const SimConfig& config, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult res;
  int point_index = 0;
  for (const std::string& det : config.detectors)
    for (double ebn0 : config.ebn0_db) {
      res.rows.push_back(run_point(config, det, ebn0, point_index, threads));
      ++point_index;
    }
  std::stable_sort(res.rows.begin(), res.rows.end(),
                   [](const ResultRow& a, const ResultRow& b) {
                     if (a.detector != b.detector) return a.detector < b.detector;
                     return a.ebn0_db < b.ebn0_db;
                   });
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string csv_header() {
  return "detector,ebn0_db,bits,bit_errors,symbols,symbol_errors,frames,"
         "frame_errors,ber,ser,fer,ber_ci_lo,ber_ci_hi,fer_ci_lo,fer_ci_hi,"
         "partial";
}

std::string csv_row(const ResultRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s,%.6g,%lld,%lld,%lld,%lld,%lld,%lld,%.10g,%.10g,%.10g,"
                "%.10g,%.10g,%.10g,%.10g,%d",
                r.detector.c_str(), r.ebn0_db, r.bits, r.bit_errors, r.symbols,
                r.symbol_errors, r.frames, r.frame_errors, r.ber, r.ser, r.fer,
                r.ber_lo, r.ber_hi, r.fer_lo, r.fer_hi, r.partial ? 1 : 0);
  return buf;
}

void write_csv(const SweepResult& result, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << csv_header() << "\n";
  for (const ResultRow& r : result.rows) f << csv_row(r) << "\n";
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string git_revision() {
  std::string rev = "unknown";
#if defined(__unix__) || defined(__APPLE__)
  if (FILE* p = popen("git rev-parse HEAD 2>/dev/null", "r")) {
    char buf[128];
    if (fgets(buf, sizeof(buf), p)) {
      rev.assign(buf);
      while (!rev.empty() && (rev.back() == '\n' || rev.back() == '\r'))
        rev.pop_back();
    }
    pclose(p);
    if (rev.empty()) rev = "unknown";
  }
#endif
  return rev;
}

void write_metadata(const SimConfig& config, const SweepResult& result,
                    const std::string& csv_path) {
  const std::string cfg = config.to_json();
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg)));

  nlohmann::ordered_json meta;
  meta["config"] = nlohmann::json::parse(cfg);
  meta["config_hash"] = hash;
  meta["seed"] = config.seed;
  meta["pilot_sequence_seed"] = kPilotSequenceSeed;
  meta["interleaver_seed"] = TurboParams{}.interleaver_seed;
  meta["git_revision"] = git_revision();
  meta["wall_seconds"] = result.wall_seconds;
  meta["ebn0_accounting"] =
      "N0 = L / (data_positions * bits_per_symbol * code_rate * 10^(ebn0_db/10)); "
      "unit symbol energy per transmit antenna, pilot overhead and code rate "
      "charged to Eb";
  std::ofstream f(csv_path + ".meta.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot open metadata file: " + csv_path + ".meta.json");
  f << meta.dump(2) << "\n";
}

}  // namespace phasync
