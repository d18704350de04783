// Command-line front end: Monte Carlo runs, numerical self-checks, and
// parity-check matrix generation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phasync/harness.hpp"
#include "phasync/oracles.hpp"

namespace {

int run_simulation(const std::string& config_path, const std::string& out_path,
                   long long seed_override, int threads, bool single_point) {
  phasync::SimConfig config = phasync::SimConfig::load_file(config_path);
  if (seed_override >= 0) config.seed = static_cast<uint64_t>(seed_override);
  if (single_point &&
      (config.ebn0_db.size() != 1 || config.detectors.size() != 1)) {
    std::cerr << "simulate expects a single-point config "
                 "(one detector, one ebn0_db entry); use sweep instead\n";
    return 2;
  }
  const phasync::SweepResult result = phasync::run_sweep(config, threads);
  phasync::write_csv(result, out_path);
  phasync::write_metadata(config, result, out_path);
  for (const auto& row : result.rows) std::cout << phasync::csv_row(row) << "\n";
  std::fprintf(stderr, "wrote %s (%zu rows, %.1f s)\n", out_path.c_str(),
               result.rows.size(), result.wall_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO phase-noise receiver simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  long long seed_override = -1;
  int threads = 1;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--out", out_path, "Output CSV path")->required();
    cmd->add_option("--seed", seed_override, "Override the config seed");
    cmd->add_option("--threads", threads, "Worker threads")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run a single (detector, Eb/N0) operating point");
  add_run_flags(simulate);
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run the full detector x Eb/N0 grid");
  add_run_flags(sweep);

  std::string oracle_name;
  CLI::App* oracle = app.add_subcommand(
      "oracle-check", "Run a named numerical self-check");
  oracle->add_option("name", oracle_name, "Check name, or 'all'")->required();

  std::string rate_str = "1/2", alist_out;
  int code_length = 2000;
  long long code_seed = 7;
  CLI::App* codegen =
      app.add_subcommand("codegen", "Generate an LDPC parity-check matrix");
  codegen->add_option("--rate", rate_str, "Code rate")
      ->check(CLI::IsMember({"1/2", "4/5"}));
  codegen->add_option("--length", code_length, "Code length (bits)")
      ->check(CLI::PositiveNumber);
  codegen->add_option("--out", alist_out, "Output alist path")->required();
  codegen->add_option("--seed", code_seed, "Construction seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return run_simulation(config_path, out_path, seed_override, threads, true);
    if (sweep->parsed())
      return run_simulation(config_path, out_path, seed_override, threads, false);
    if (oracle->parsed()) {
      std::vector<std::string> names;
      if (oracle_name == "all")
        names = phasync::oracle_names();
      else
        names.push_back(oracle_name);
      bool all_passed = true;
      for (const auto& name : names) {
        const phasync::OracleReport rep = phasync::run_oracle(name);
        std::cout << rep.name << ": " << (rep.passed ? "PASS" : "FAIL") << "\n";
        for (const auto& line : rep.lines) std::cout << "  " << line << "\n";
        all_passed = all_passed && rep.passed;
      }
      return all_passed ? 0 : 1;
    }
    if (codegen->parsed()) {
      const double rate = rate_str == "1/2" ? 0.5 : 0.8;
      const phasync::ParityCheckMatrix h = phasync::generate_ldpc(
          code_length, rate, static_cast<uint64_t>(code_seed));
      std::ofstream f(alist_out, std::ios::binary);
      if (!f) {
        std::cerr << "cannot open " << alist_out << "\n";
        return 2;
      }
      f << phasync::serialize_alist(h);
      std::fprintf(stderr, "wrote %s: n=%d m=%d rank=%d rate=%.4f\n",
                   alist_out.c_str(), h.n, h.m, h.rank,
                   static_cast<double>(h.dimension()) / h.n);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
