// sparsequbo: learn dictionaries, build and solve sparse-coding QUBOs, reconstruct images.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsequbo/experiment.hpp"

namespace sq = sparsequbo;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> sampler;
  std::optional<std::string> patches;
  std::optional<std::string> s_values;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> workers;
  std::vector<std::string> solutions;
  std::string input;
};

sq::ExperimentConfig resolve(const Flags& f) {
  sq::ExperimentConfig c = f.config.empty() ? sq::ExperimentConfig{} : sq::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.sampler) c.sampler = *f.sampler;
  if (f.patches) c.patches = sq::parse_index_list(*f.patches);
  if (f.s_values) c.s_values = sq::parse_real_list("--s-values", *f.s_values);
  if (f.iterations) c.iterations = *f.iterations;
  if (f.batch) c.batch = *f.batch;
  if (f.workers) c.workers = *f.workers;
  for (const auto& s : f.solutions) c.solutions.emplace_back(s);
  c.input = f.input;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary sparse coding with QUBO samplers"};
  app.set_version_flag("--version", sq::version_string());
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "INI experiment configuration");
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--sampler", f.sampler, "sa, nebm, brute, random or reverse-sa");
  app.add_option("--patches", f.patches, "Patch selection, e.g. 0,3,5-7 or all");
  app.add_option("--s-values", f.s_values, "Comma-separated anneal fractions for qemc");
  app.add_option("--iterations", f.iterations, "Protocol iterations");
  app.add_option("--batch", f.batch, "Reads per qemc chain step");
  app.add_option("--workers", f.workers, "Worker threads");

  auto* learn = app.add_subcommand("learn-dict", "Learn a dictionary from dataset patches");
  auto* build = app.add_subcommand("build-qubo", "Write one QUBO file per patch");
  auto* solve = app.add_subcommand("solve", "Sample every patch QUBO with the configured protocol");
  auto* warm = app.add_subcommand("warm-start", "solve with the warm-start protocol");
  auto* qemc = app.add_subcommand("qemc", "solve with the qemc protocol for each s value");
  auto* recon = app.add_subcommand("reconstruct", "Reassemble images from solution files");
  recon->add_option("--solutions", f.solutions, "solutions.json files to compare");
  auto* report = app.add_subcommand("report", "Print a solve table rounded to 4 decimals");
  report->add_option("--input", f.input, "solve.csv to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto c = resolve(f);
    if (learn->parsed()) sq::cmd_learn_dict(c, std::cout);
    else if (build->parsed()) sq::cmd_build_qubo(c, std::cout);
    else if (solve->parsed()) sq::cmd_solve(c, std::cout);
    else if (warm->parsed()) {
      c.protocol = "warm-start";
      sq::cmd_solve(c, std::cout);
    } else if (qemc->parsed()) {
      c.protocol = "qemc";
      sq::cmd_solve(c, std::cout);
    } else if (recon->parsed()) sq::cmd_reconstruct(c, std::cout);
    else if (report->parsed()) sq::cmd_report(c, std::cout);
  } catch (const sq::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
