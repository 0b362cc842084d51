#pragma once

// End-to-end experiment driver behind the command-line tool: INI configuration,
// the per-subcommand pipelines, and the Table-style solve report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sparsequbo/data_io.hpp"
#include "sparsequbo/dict_learning.hpp"
#include "sparsequbo/error.hpp"
#include "sparsequbo/format.hpp"
#include "sparsequbo/meta_strategies.hpp"
#include "sparsequbo/qubo_io.hpp"
#include "sparsequbo/samplers/brute_force.hpp"
#include "sparsequbo/samplers/nebm.hpp"
#include "sparsequbo/samplers/random_sampler.hpp"
#include "sparsequbo/samplers/simulated_annealing.hpp"
#include "sparsequbo/sparse_coding.hpp"

namespace sparsequbo {

/// A configured input file that does not exist. Maps to exit status 2.
class MissingPath : public ConfigError {
 public:
  explicit MissingPath(const std::filesystem::path& path, const std::string& role)
      : ConfigError(role + " not found: " + path.string()), path_(path) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

struct ExperimentConfig {
  // [data]
  std::filesystem::path dataset;
  std::size_t image_index = 0;
  std::size_t train_images = 1;
  std::size_t patch_edge = 7;
  std::vector<std::size_t> patches;  ///< empty selects every patch

  // [dictionary]
  std::filesystem::path dictionary;
  LearnConfig learn;

  // [qubo]
  QuboMode mode = QuboMode::paper;
  std::optional<double> lambda;  ///< falls back to the dictionary file's lambda
  std::filesystem::path qubo_dir;
  std::string qubo_format = "coo";

  // [sampler]
  std::string sampler;  ///< empty: sa, or reverse-sa under the qemc protocol
  std::optional<std::size_t> reads;
  SaConfig sa;
  NebmConfig nebm;
  ReverseScheduleConfig reverse;

  // [protocol]
  std::string protocol = "plain";
  std::size_t iterations = 100;
  std::size_t batch = 1000;
  std::vector<double> s_values{0.5};
  bool elitist = false;
  std::optional<std::size_t> cold_start_sweeps;

  // [run]
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  std::size_t workers = 1;
  std::size_t brute_force_max = 20;

  // command inputs
  std::vector<std::filesystem::path> solutions;
  std::filesystem::path input;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range '" + text + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& text) {
  try {
    return parse_double(trim(text));
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

inline IntRange parse_int_range(const std::string& key, const std::string& text) {
  const auto parts = split(text, '-');
  if (parts.size() == 1) {
    const int v = static_cast<int>(parse_u64(key, parts[0]));
    return {v, v};
  }
  if (parts.size() != 2) throw ConfigError(key + ": expected 'lo-hi', got '" + text + "'");
  return {static_cast<int>(parse_u64(key, parts[0])), static_cast<int>(parse_u64(key, parts[1]))};
}

}  // namespace detail

/// "0,2,5-7" -> {0, 2, 5, 6, 7}; "all" or "" -> {}.
inline std::vector<std::size_t> parse_index_list(const std::string& text) {
  const std::string t = detail::trim(text);
  if (t.empty() || t == "all") return {};
  std::vector<std::size_t> out;
  for (const auto& item : detail::split(t, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(detail::parse_u64("patches", item));
      continue;
    }
    const auto lo = detail::parse_u64("patches", item.substr(0, dash));
    const auto hi = detail::parse_u64("patches", item.substr(dash + 1));
    if (lo > hi) throw ConfigError("patches: empty range '" + item + "'");
    for (auto k = lo; k <= hi; ++k) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : detail::split(text, ',')) out.push_back(detail::parse_real(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

/// Applies one `section.key = value` setting. Relative paths resolve against `base`.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value,
                          const std::filesystem::path& base = {}) {
  using namespace detail;
  auto path = [&] {
    std::filesystem::path p(trim(value));
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  auto size = [&] { return static_cast<std::size_t>(parse_u64(key, value)); };
  auto real = [&] { return parse_real(key, value); };

  const std::map<std::string, std::function<void()>> setters = {
      {"data.dataset", [&] { c.dataset = path(); }},
      {"data.image_index", [&] { c.image_index = size(); }},
      {"data.train_images", [&] { c.train_images = size(); }},
      {"data.patch_edge", [&] { c.patch_edge = size(); }},
      {"data.patches", [&] { c.patches = parse_index_list(value); }},
      {"dictionary.path", [&] { c.dictionary = path(); }},
      {"dictionary.atoms", [&] { c.learn.atoms = size(); }},
      {"dictionary.s_target", [&] { c.learn.s_target = real(); }},
      {"dictionary.lambda_init", [&] { c.learn.lambda_init = real(); }},
      {"dictionary.lambda_growth", [&] { c.learn.lambda_growth = real(); }},
      {"dictionary.learning_rate", [&] { c.learn.learning_rate = real(); }},
      {"dictionary.epochs", [&] { c.learn.epochs = size(); }},
      {"dictionary.convergence_tol", [&] { c.learn.convergence_tol = real(); }},
      {"dictionary.batch_size", [&] { c.learn.batch_size = size(); }},
      {"dictionary.reads", [&] { c.learn.reads = size(); }},
      {"dictionary.mode", [&] { c.learn.mode = parse_qubo_mode(trim(value)); }},
      {"qubo.mode", [&] { c.mode = parse_qubo_mode(trim(value)); }},
      {"qubo.lambda", [&] { c.lambda = real(); }},
      {"qubo.dir", [&] { c.qubo_dir = path(); }},
      {"qubo.format", [&] { c.qubo_format = trim(value); }},
      {"sampler.name", [&] { c.sampler = trim(value); }},
      {"sampler.reads", [&] { c.reads = size(); }},
      {"sampler.sweeps",
       [&] {
         c.sa.sweeps = size();
         c.reverse.sweeps = c.sa.sweeps;
       }},
      {"sampler.schedule", [&] { c.sa.schedule = parse_beta_schedule(trim(value)); }},
      {"sampler.beta_range",
       [&] {
         const auto v = parse_real_list(key, value);
         if (v.size() != 2) throw ConfigError(key + ": expected 'hot,cold'");
         c.sa.beta_range = BetaRange{v[0], v[1]};
         c.reverse.beta_range = c.sa.beta_range;
       }},
      {"sampler.t_max", [&] { c.nebm.t_max = real(); }},
      {"sampler.t_min", [&] { c.nebm.t_min = real(); }},
      {"sampler.delta_t", [&] { c.nebm.delta_t = real(); }},
      {"sampler.steps_per_temperature", [&] { c.nebm.steps_per_temperature = size(); }},
      {"sampler.total_steps", [&] { c.nebm.total_steps = size(); }},
      {"sampler.sample_interval", [&] { c.nebm.sample_interval = size(); }},
      {"sampler.alpha", [&] { c.nebm.alpha = real(); }},
      {"sampler.gamma", [&] { c.nebm.gamma = real(); }},
      {"sampler.rho", [&] { c.nebm.rho = real(); }},
      {"sampler.kappa", [&] { c.nebm.kappa = real(); }},
      {"sampler.threshold", [&] { c.nebm.threshold = real(); }},
      {"sampler.refract_hold", [&] { c.nebm.refract_hold = parse_int_range(key, value); }},
      {"sampler.refract_scaling", [&] { c.nebm.refract_scaling = parse_int_range(key, value); }},
      {"sampler.cycle",
       [&] {
         const auto v = trim(value);
         if (v == "cyclic") c.nebm.cycle = TemperatureCycle::cyclic;
         else if (v == "hold_at_floor") c.nebm.cycle = TemperatureCycle::hold_at_floor;
         else throw ConfigError(key + ": expected cyclic or hold_at_floor");
       }},
      {"sampler.ramp_fractions",
       [&] {
         const auto v = parse_real_list(key, value);
         if (v.size() != 3) throw ConfigError(key + ": expected 'down,pause,up'");
         c.reverse.ramp_down = v[0];
         c.reverse.pause = v[1];
         c.reverse.ramp_up = v[2];
       }},
      {"protocol.name", [&] { c.protocol = trim(value); }},
      {"protocol.iterations", [&] { c.iterations = size(); }},
      {"protocol.batch", [&] { c.batch = size(); }},
      {"protocol.s_values", [&] { c.s_values = parse_real_list(key, value); }},
      {"protocol.elitist", [&] { c.elitist = parse_bool(key, value); }},
      {"protocol.cold_start_sweeps", [&] { c.cold_start_sweeps = size(); }},
      {"run.seed", [&] { c.seed = parse_u64(key, value); }},
      {"run.out", [&] { c.out = path(); }},
      {"run.workers", [&] { c.workers = size(); }},
      {"run.brute_force_max", [&] { c.brute_force_max = size(); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second();
}

inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::filesystem::path& base = {}) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : entries) {
      apply_setting(config, section + "." + key, node.get_value<std::string>(), base);
    }
  }
  return config;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingPath(path, "config file");
  return parse_config_text(read_file_text(path), path.parent_path());
}

inline std::string sampler_name(const ExperimentConfig& c) {
  if (!c.sampler.empty()) return c.sampler;
  return c.protocol == "qemc" ? "reverse-sa" : "sa";
}

inline std::size_t sampler_reads(const ExperimentConfig& c) {
  if (c.reads) return *c.reads;
  const auto name = sampler_name(c);
  return name == "nebm" || name == "brute" ? 1 : c.sa.reads;
}

inline std::unique_ptr<Sampler> make_sampler(const ExperimentConfig& c, std::optional<double> s = {}) {
  const auto name = sampler_name(c);
  if (name == "sa") return std::make_unique<SimulatedAnnealingSampler>(c.sa);
  if (name == "nebm") return std::make_unique<NebmSampler>(c.nebm);
  if (name == "brute") return std::make_unique<BruteForceSampler>();
  if (name == "random") return std::make_unique<RandomSampler>();
  if (name == "reverse-sa") {
    ReverseScheduleConfig rc = c.reverse;
    if (s) rc.s = *s;
    return std::make_unique<ReverseAnnealSampler>(rc);
  }
  throw ConfigError("unknown sampler '" + name + "' (expected sa, nebm, brute, random or reverse-sa)");
}

/// Structural checks that do not touch the filesystem.
inline void validate(const ExperimentConfig& c) {
  if (c.protocol != "plain" && c.protocol != "warm-start" && c.protocol != "qemc") {
    throw ConfigError("unknown protocol '" + c.protocol + "' (expected plain, warm-start or qemc)");
  }
  if (c.qubo_format != "coo" && c.qubo_format != "json") {
    throw ConfigError("qubo.format must be coo or json");
  }
  if (c.patch_edge == 0) throw ConfigError("patch_edge must be positive");
  if (c.train_images == 0) throw ConfigError("train_images must be positive");
  if (c.workers == 0) throw ConfigError("workers must be positive");
  if (c.iterations == 0 || c.batch == 0) throw ConfigError("iterations and batch must be positive");
  if (c.reads && *c.reads == 0) throw ConfigError("sampler.reads must be positive");
  if (c.lambda && !(*c.lambda >= 0.0)) throw ConfigError("qubo.lambda must be non-negative");
  for (double s : c.s_values) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigError("s_values must lie in (0, 1)");
  }
  validate(c.learn);
  make_sampler(c);
  if (c.protocol != "plain" && sampler_name(c) == "brute") {
    throw ConfigError("the brute-force sampler cannot be chained");
  }
  if (c.protocol == "plain" && sampler_name(c) == "reverse-sa") {
    throw ConfigError("reverse-sa needs an initial state; use the warm-start or qemc protocol");
  }
}

inline void require_file(const std::filesystem::path& path, const std::string& role) {
  if (path.empty()) throw ConfigError(role + " path is not configured");
  if (!std::filesystem::exists(path)) throw MissingPath(path, role);
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces

struct PatchProblem {
  std::size_t index = 0;
  QuboProblem problem;
};

inline std::vector<ImagePatch> load_patches(const ExperimentConfig& c, std::size_t image_index) {
  const auto tensor = load_idx(c.dataset);
  return patch_image(idx_image(tensor, image_index), c.patch_edge);
}

inline std::vector<std::size_t> selected(const ExperimentConfig& c, std::size_t available) {
  if (c.patches.empty()) {
    std::vector<std::size_t> all(available);
    for (std::size_t k = 0; k < available; ++k) all[k] = k;
    return all;
  }
  for (auto k : c.patches) {
    if (k >= available) {
      throw ConfigError("patch index " + std::to_string(k) + " out of range (" +
                        std::to_string(available) + " available)");
    }
  }
  return c.patches;
}

inline double resolve_lambda(const ExperimentConfig& c, const StoredDictionary& stored) {
  if (c.lambda) return *c.lambda;
  if (stored.lambda) return *stored.lambda;
  throw ConfigError("no lambda: set qubo.lambda or use a dictionary file that stores one");
}

inline std::vector<PatchProblem> build_problems(const ExperimentConfig& c) {
  require_file(c.dataset, "dataset");
  require_file(c.dictionary, "dictionary");
  const auto stored = load_dictionary(c.dictionary);
  const double lambda = resolve_lambda(c, stored);
  const auto patches = load_patches(c, c.image_index);
  std::vector<PatchProblem> out;
  for (auto k : selected(c, patches.size())) {
    out.push_back({k, build_qubo(patches[k], stored.dictionary, lambda, c.mode)});
  }
  return out;
}

inline std::vector<PatchProblem> load_problems(const ExperimentConfig& c) {
  require_file(c.qubo_dir, "QUBO directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(c.qubo_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".coo" || ext == ".json" || ext == ".txt")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no QUBO files in " + c.qubo_dir.string());
  std::vector<PatchProblem> out;
  for (auto k : selected(c, files.size())) out.push_back({k, load_qubo(files[k])});
  return out;
}

inline std::string patch_name(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return "patch_" + digits;
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
  return {{"dataset", c.dataset.string()},
          {"image_index", c.image_index},
          {"patch_edge", c.patch_edge},
          {"patches", c.patches},
          {"dictionary", c.dictionary.string()},
          {"qubo_mode", to_string(c.mode)},
          {"lambda", c.lambda ? nlohmann::json(*c.lambda) : nlohmann::json(nullptr)},
          {"qubo_dir", c.qubo_dir.string()},
          {"sampler", sampler_name(c)},
          {"reads", sampler_reads(c)},
          {"protocol", c.protocol},
          {"iterations", c.iterations},
          {"batch", c.batch},
          {"s_values", c.s_values},
          {"elitist", c.elitist},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Commands

inline void cmd_learn_dict(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  require_file(c.dataset, "dataset");
  std::vector<ImagePatch> training;
  for (std::size_t k = 0; k < c.train_images; ++k) {
    auto patches = load_patches(c, c.image_index + k);
    training.insert(training.end(), patches.begin(), patches.end());
  }
  LearnConfig lc = c.learn;
  lc.seed = c.seed;
  const SimulatedAnnealingSampler solver(c.sa);
  const auto result = train(training, lc, solver);

  RunWriter writer(c.out);
  writer.write("dictionary.json", dictionary_to_json(result.dictionary, result.lambda_final).dump(1) + "\n");
  writer.write("learn_trace.csv", result.trace.to_csv());
  nlohmann::json config = config_json(c);
  config["learn"] = {{"atoms", lc.atoms},
                     {"s_target", lc.s_target},
                     {"lambda_init", lc.lambda_init},
                     {"lambda_growth", lc.lambda_growth},
                     {"learning_rate", lc.learning_rate},
                     {"epochs", lc.epochs},
                     {"convergence_tol", lc.convergence_tol},
                     {"batch_size", lc.batch_size},
                     {"reads", lc.reads},
                     {"mode", to_string(lc.mode)}};
  writer.finish({"learn-dict", config, {{"master", c.seed}}});
  log << "learned " << lc.atoms << " atoms from " << training.size() << " patches in "
      << result.trace.epochs.size() << " epochs (lambda " << format_report(result.lambda_final)
      << (result.converged ? ", converged" : "") << ")\n";
}

inline void cmd_build_qubo(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  const auto problems = build_problems(c);
  RunWriter writer(c.out);
  const std::string ext = c.qubo_format == "json" ? ".json" : ".coo";
  for (const auto& p : problems) {
    std::string text;
    if (c.qubo_format == "json") {
      text = qubo_to_json(p.problem).dump(1) + "\n";
    } else {
      std::ostringstream out;
      save_qubo_coo(p.problem, out);
      text = out.str();
    }
    writer.write("qubos/" + patch_name(p.index) + ext, text);
  }
  writer.finish({"build-qubo", config_json(c), {{"master", c.seed}}});
  log << "wrote " << problems.size() << " QUBOs to " << (c.out / "qubos").string() << "\n";
}

struct SolveRow {
  std::size_t qubo_index = 0;
  std::optional<double> s;
  std::optional<double> ground_energy;
  std::optional<std::string> optimal_sparsity;
  double min_energy = 0.0;
  std::size_t min_count = 0;
  std::size_t samples = 0;
  std::string best_sparsity;
  BinaryState best_state;
};

inline std::string solve_csv(const std::vector<SolveRow>& rows) {
  std::string out =
      "qubo_index,s,ground_state_energy,method_min_energy,min_energy_count,num_reads,"
      "optimal_sparsity,method_best_sparsity\n";
  for (const auto& r : rows) {
    out += std::to_string(r.qubo_index) + "," + (r.s ? format_full(*r.s) : "") + "," +
           (r.ground_energy ? format_full(*r.ground_energy) : "") + "," +
           format_full(r.min_energy) + "," + std::to_string(r.min_count) + "," +
           std::to_string(r.samples) + "," + r.optimal_sparsity.value_or("") + "," +
           r.best_sparsity + "\n";
  }
  return out;
}

/// Runs the configured protocol on every selected patch (and every s for qemc).
inline void cmd_solve(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  const auto problems = c.qubo_dir.empty() ? build_problems(c) : load_problems(c);

  struct Item {
    std::size_t problem = 0;
    std::optional<double> s;
  };
  std::vector<Item> items;
  for (std::size_t k = 0; k < problems.size(); ++k) {
    if (c.protocol == "qemc") {
      for (double s : c.s_values) items.push_back({k, s});
    } else {
      items.push_back({k, std::nullopt});
    }
  }

  struct Outcome {
    SolveRow row;
    std::string artifact;
    std::string artifact_name;
    std::uint64_t seed = 0;
  };
  std::vector<Outcome> outcomes(items.size());
  std::vector<std::optional<BruteForceResult>> ground(problems.size());

  parallel_for_index(problems.size(), c.workers, [&](std::size_t k) {
    if (problems[k].problem.size() <= c.brute_force_max) ground[k] = brute_force(problems[k].problem);
  });

  const std::size_t reads = sampler_reads(c);
  parallel_for_index(items.size(), c.workers, [&](std::size_t w) {
    const auto& item = items[w];
    const auto& pp = problems[item.problem];
    const auto& q = pp.problem;
    Outcome& o = outcomes[w];
    o.seed = item.s ? derive_seed(c.seed, {pp.index, static_cast<std::uint64_t>(std::llround(*item.s * 1e6))})
                    : derive_seed(c.seed, {pp.index});
    const auto sampler = make_sampler(c, item.s);
    SolveRow& row = o.row;
    row.qubo_index = pp.index;
    row.s = item.s;
    std::string stem = patch_name(pp.index);
    if (item.s) stem += "_s" + format_full(*item.s);

    if (c.protocol == "plain") {
      const SampleSet set = sampler->sample({q, reads, std::nullopt, o.seed, 1});
      row.min_energy = set.lowest().energy;
      row.min_count = set.count_at(row.min_energy);
      row.samples = set.num_reads();
      row.best_state = set.lowest().state;
      o.artifact = set.to_json().dump(1) + "\n";
      o.artifact_name = "samples/" + stem + ".json";
    } else {
      ChainTrace trace;
      if (c.protocol == "warm-start") {
        trace = iterated_warm_start(q, *sampler, o.seed, {c.iterations, reads, 1});
      } else {
        SaConfig cold_cfg = c.sa;
        if (c.cold_start_sweeps) cold_cfg.sweeps = *c.cold_start_sweeps;
        const SimulatedAnnealingSampler cold(cold_cfg);
        trace = qemc_chain(q, *sampler, cold, o.seed, {c.iterations, c.batch, c.elitist, 1});
      }
      row.min_energy = trace.best_energy;
      for (const auto& r : trace.records) {
        row.min_count += std::abs(r.batch_best_energy - trace.best_energy) <= kEnergyTolerance;
      }
      row.samples = trace.records.size();
      row.best_state = trace.best_state;
      o.artifact = trace.to_csv();
      o.artifact_name = "traces/" + stem + ".csv";
    }
    row.best_sparsity = format_sparsity(row.best_state);
    if (const auto& g = ground[item.problem]) {
      row.ground_energy = g->energy;
      row.optimal_sparsity = format_sparsity(g->optimal_states.front());
    }
  });

  for (const auto& o : outcomes) {
    if (o.row.ground_energy && o.row.min_energy < *o.row.ground_energy - kEnergyTolerance) {
      throw std::runtime_error("self-check failed: sampler beat the exact ground state on QUBO " +
                               std::to_string(o.row.qubo_index));
    }
  }

  RunWriter writer(c.out);
  nlohmann::json seeds = {{"master", c.seed}};
  std::vector<SolveRow> rows;
  for (const auto& o : outcomes) {
    writer.write(o.artifact_name, o.artifact);
    seeds[o.artifact_name] = o.seed;
    rows.push_back(o.row);
  }
  writer.write("solve.csv", solve_csv(rows));

  // Best state per patch across s values.
  nlohmann::json sol = {{"protocol", c.protocol},
                        {"sampler", sampler_name(c)},
                        {"qubo_mode", to_string(c.mode)},
                        {"patches", nlohmann::json::array()}};
  std::map<std::size_t, const SolveRow*> best;
  for (const auto& r : rows) {
    auto& slot = best[r.qubo_index];
    if (!slot || r.min_energy < slot->min_energy) slot = &r;
  }
  for (const auto& [index, r] : best) {
    sol["patches"].push_back(
        {{"index", index}, {"state", to_bitstring(r->best_state)}, {"energy", r->min_energy}});
  }
  writer.write("solutions.json", sol.dump(1) + "\n");
  writer.finish({"solve", config_json(c), seeds});
  log << "solved " << rows.size() << " work items; report in " << (c.out / "solve.csv").string()
      << "\n";
}

struct Solutions {
  std::string label;
  std::map<std::size_t, BinaryState> states;
};

inline Solutions load_solutions(const std::filesystem::path& path) {
  require_file(path, "solutions file");
  Solutions out;
  out.label = path.filename() == "solutions.json" && path.has_parent_path() &&
                      !path.parent_path().filename().empty()
                  ? path.parent_path().filename().string()
                  : path.stem().string();
  try {
    const auto j = nlohmann::json::parse(read_file_text(path));
    for (const auto& p : j.at("patches")) {
      out.states[p.at("index").get<std::size_t>()] = from_bitstring(p.at("state").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

/// Reassembles one image per solutions file and writes per-patch metrics plus a
/// side-by-side table when several solution sets are compared.
inline void cmd_reconstruct(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  require_file(c.dataset, "dataset");
  require_file(c.dictionary, "dictionary");
  std::vector<std::filesystem::path> files = c.solutions;
  if (files.empty()) files.push_back(c.out / "solutions.json");
  std::vector<Solutions> sets;
  for (const auto& f : files) sets.push_back(load_solutions(f));
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (sets[a].label == sets[b].label) sets[a].label += "_" + std::to_string(a);
    }
  }

  const auto stored = load_dictionary(c.dictionary);
  const double lambda = resolve_lambda(c, stored);
  const auto tensor = load_idx(c.dataset);
  const Image original = idx_image(tensor, c.image_index);
  const auto patches = patch_image(original, c.patch_edge);
  const std::size_t p = stored.dictionary.atoms();

  RunWriter writer(c.out);
  writer.write("original.pgm", encode_pgm(original));
  nlohmann::json metrics_out = nlohmann::json::object();
  std::vector<std::vector<CodeMetrics>> table(sets.size());
  std::vector<std::vector<double>> energies(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::vector<ImagePatch> recon;
    nlohmann::json per_patch = nlohmann::json::array();
    double total_energy = 0.0, total_error = 0.0, total_sparsity = 0.0;
    for (std::size_t k = 0; k < patches.size(); ++k) {
      BinaryState a(p, 0);
      if (auto it = sets[s].states.find(k); it != sets[s].states.end()) {
        if (it->second.size() != p) {
          throw DimensionError(sets[s].label + ": patch " + std::to_string(k) + " state has " +
                               std::to_string(it->second.size()) + " bits, dictionary has " +
                               std::to_string(p) + " atoms");
        }
        a = it->second;
      }
      recon.push_back(reconstruct(stored.dictionary, a, patches[k]));
      const auto m = metrics(patches[k].values, stored.dictionary, a, lambda);
      const double e = energy(build_qubo(patches[k], stored.dictionary, lambda, c.mode), a);
      table[s].push_back(m);
      energies[s].push_back(e);
      total_energy += e;
      total_error += m.recon_error;
      total_sparsity += static_cast<double>(m.sparsity);
      per_patch.push_back({{"index", k},
                           {"energy", e},
                           {"sparsity", m.sparsity},
                           {"sparsity_text", format_sparsity(a)},
                           {"recon_error", m.recon_error},
                           {"objective", m.objective}});
    }
    writer.write(sets[s].label + ".pgm", encode_pgm(unpatch(recon)));
    const auto count = static_cast<double>(patches.size());
    metrics_out[sets[s].label] = {{"patches", per_patch},
                                  {"total_energy", total_energy},
                                  {"mean_recon_error", total_error / count},
                                  {"mean_sparsity", total_sparsity / count}};
  }
  writer.write("metrics.json", metrics_out.dump(1) + "\n");

  if (sets.size() > 1) {
    std::string diff = "patch";
    for (const auto& s : sets) {
      diff += "," + s.label + "_energy," + s.label + "_sparsity," + s.label + "_recon_error";
    }
    for (std::size_t s = 1; s < sets.size(); ++s) {
      diff += ",delta_energy_" + sets[s].label;
    }
    diff += "\n";
    for (std::size_t k = 0; k < patches.size(); ++k) {
      diff += std::to_string(k);
      for (std::size_t s = 0; s < sets.size(); ++s) {
        diff += "," + format_full(energies[s][k]) + "," + std::to_string(table[s][k].sparsity) +
                "," + format_full(table[s][k].recon_error);
      }
      for (std::size_t s = 1; s < sets.size(); ++s) {
        diff += "," + format_full(energies[s][k] - energies[0][k]);
      }
      diff += "\n";
    }
    writer.write("diff.csv", diff);
  }
  writer.finish({"reconstruct", config_json(c), {{"master", c.seed}}});
  log << "reconstructed " << sets.size() << " image(s) into " << c.out.string() << "\n";
}

/// Pretty-prints a solve.csv with energies rounded to four decimals.
inline std::string render_solve_report(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("report: empty solve table");
  const auto header = detail::split(line, ',');
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("report: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_index = column("qubo_index"), c_s = column("s"),
             c_ground = column("ground_state_energy"), c_min = column("method_min_energy"),
             c_count = column("min_energy_count"), c_reads = column("num_reads"),
             c_opt = column("optimal_sparsity"), c_best = column("method_best_sparsity");

  auto energy_text = [](const std::string& v) {
    return v.empty() ? std::string("-") : format_report(parse_double(v));
  };
  std::vector<std::vector<std::string>> rows = {
      {"QUBO", "s", "Ground state", "Min. energy", "Count", "Opt. sparsity", "Best sparsity"}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != header.size()) throw ParseError("report: wrong field count", line_no);
    try {
      rows.push_back({f[c_index], f[c_s].empty() ? "-" : f[c_s], energy_text(f[c_ground]),
                      energy_text(f[c_min]), f[c_count] + " / " + f[c_reads],
                      f[c_opt].empty() ? "-" : f[c_opt], f[c_best]});
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("report: ") + e.what(), line_no);
    }
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) width[k] = std::max(width[k], r[k].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      if (k) out += "  ";
      out += std::string(width[k] - rows[i][k].size(), ' ') + rows[i][k];
    }
    out += "\n";
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

inline void cmd_report(const ExperimentConfig& c, std::ostream& out) {
  const auto path = c.input.empty() ? c.out / "solve.csv" : c.input;
  require_file(path, "solve table");
  out << render_solve_report(read_file_text(path));
}

}  // namespace sparsequbo
