#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsequbo/checksum.hpp"
#include "sparsequbo/format.hpp"
#include "sparsequbo/qubo.hpp"
#include "sparsequbo/random.hpp"
#include "sparsequbo/samplers/sampler.hpp"
#include "sparsequbo/samplers/simulated_annealing.hpp"

namespace sparsequbo {

// ---------------------------------------------------------------------------
// Reverse-schedule annealing

/// Classical analogue of a reverse anneal: start cold at a given state, warm to
/// beta(s) = beta_hot * (beta_cold / beta_hot)^s, pause, and cool back down.
struct ReverseScheduleConfig {
  double s = 0.5;
  double ramp_down = 0.10;
  double pause = 0.80;
  double ramp_up = 0.10;
  std::size_t sweeps = 1000;
  std::optional<BetaRange> beta_range;
};

inline void validate(const ReverseScheduleConfig& c) {
  if (!(c.s > 0.0 && c.s < 1.0)) throw ConfigError("reverse anneal fraction s must lie in (0, 1)");
  if (!(c.ramp_down > 0.0 && c.pause > 0.0 && c.ramp_up > 0.0)) {
    throw ConfigError("reverse schedule fractions must be positive");
  }
  if (std::abs(c.ramp_down + c.pause + c.ramp_up - 1.0) > 1e-9) {
    throw ConfigError("reverse schedule fractions must sum to 1");
  }
  if (c.sweeps < 3) throw ConfigError("reverse schedule needs at least 3 sweeps");
  if (c.beta_range) validate(*c.beta_range);
}

inline double pause_beta(BetaRange range, double s) {
  return range.hot * std::pow(range.cold / range.hot, s);
}

/// Per-sweep betas: geometric cold -> beta(s), constant pause, geometric beta(s) -> cold.
inline std::vector<double> reverse_beta_schedule(const ReverseScheduleConfig& c, BetaRange range) {
  const auto total = static_cast<double>(c.sweeps);
  auto down = static_cast<std::size_t>(std::llround(c.ramp_down * total));
  auto hold = static_cast<std::size_t>(std::llround(c.pause * total));
  down = std::max<std::size_t>(1, down);
  hold = std::max<std::size_t>(1, std::min(hold, c.sweeps - down - 1));
  const std::size_t up = c.sweeps - down - hold;
  const double mid = pause_beta(range, c.s);
  std::vector<double> betas;
  betas.reserve(c.sweeps);
  for (std::size_t k = 1; k <= down; ++k) {
    betas.push_back(range.cold * std::pow(mid / range.cold, static_cast<double>(k) / down));
  }
  betas.insert(betas.end(), hold, mid);
  for (std::size_t k = 1; k <= up; ++k) {
    betas.push_back(mid * std::pow(range.cold / mid, static_cast<double>(k) / up));
  }
  return betas;
}

inline nlohmann::json to_json(const ReverseScheduleConfig& c, const BetaRange& range) {
  return {{"s", c.s},
          {"ramp_down", c.ramp_down},
          {"pause", c.pause},
          {"ramp_up", c.ramp_up},
          {"sweeps", c.sweeps},
          {"beta_hot", range.hot},
          {"beta_cold", range.cold},
          {"beta_pause", pause_beta(range, c.s)}};
}

inline SampleSet reverse_sa_sampler(const SamplerRequest& request,
                                    const ReverseScheduleConfig& config) {
  validate_request(request);
  validate(config);
  if (!request.initial_state) throw ConfigError("reverse annealing requires an initial state");
  const auto started = std::chrono::steady_clock::now();
  const BetaRange range = config.beta_range.value_or(default_beta_range(request.problem));
  const auto betas = reverse_beta_schedule(config, range);
  auto reads = detail::run_reads(request, [&](std::size_t, Rng& rng) {
    detail::MetropolisWalker walker(request.problem, *request.initial_state);
    for (double beta : betas) walker.sweep(beta, rng);
    return std::vector<detail::ReadSample>{{walker.state(), walker.energy()}};
  });
  return detail::collect(request, reads, {"reverse-sa", request.seed, to_json(config, range), 0.0},
                         started);
}

class ReverseAnnealSampler final : public Sampler {
 public:
  explicit ReverseAnnealSampler(ReverseScheduleConfig config = {}) : config_(std::move(config)) {
    validate(config_);
  }
  std::string name() const override { return "reverse-sa"; }
  nlohmann::json parameters() const override {
    nlohmann::json j = {{"s", config_.s},
                        {"ramp_down", config_.ramp_down},
                        {"pause", config_.pause},
                        {"ramp_up", config_.ramp_up},
                        {"sweeps", config_.sweeps}};
    if (config_.beta_range) {
      j["beta_hot"] = config_.beta_range->hot;
      j["beta_cold"] = config_.beta_range->cold;
    }
    return j;
  }
  SampleSet sample(const SamplerRequest& request) const override {
    return reverse_sa_sampler(request, config_);
  }
  const ReverseScheduleConfig& config() const noexcept { return config_; }

 private:
  ReverseScheduleConfig config_;
};

// ---------------------------------------------------------------------------
// Chained protocols

struct ChainRecord {
  std::size_t iteration = 0;
  BinaryState incumbent;          ///< state carried into the next iteration
  double incumbent_energy = 0.0;
  double batch_best_energy = 0.0;
  std::size_t batch_size = 0;     ///< reads/samples consumed by this iteration
  /// Mean fraction of bits each read shares with the state it was started from.
  std::optional<double> mean_overlap;
};

struct ChainTrace {
  std::string protocol;
  std::string sampler;
  std::optional<double> s;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> iteration_seeds;
  std::vector<ChainRecord> records;
  BinaryState best_state;
  double best_energy = std::numeric_limits<double>::infinity();

  std::size_t total_reads() const {
    std::size_t total = 0;
    for (const auto& r : records) total += r.batch_size;
    return total;
  }

  /// Running minimum of batch best energies, one entry per record.
  std::vector<double> global_best_series() const {
    std::vector<double> out;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      best = std::min(best, r.batch_best_energy);
      out.push_back(best);
    }
    return out;
  }

  std::vector<double> incumbent_series() const {
    std::vector<double> out;
    for (const auto& r : records) out.push_back(r.incumbent_energy);
    return out;
  }

  /// Columns: iteration, batch_min_energy, incumbent_energy, global_best_energy.
  std::string to_csv() const {
    std::string out = "iteration,batch_min_energy,incumbent_energy,global_best_energy\n";
    const auto global = global_best_series();
    for (std::size_t k = 0; k < records.size(); ++k) {
      out += std::to_string(records[k].iteration) + "," +
             format_full(records[k].batch_best_energy) + "," +
             format_full(records[k].incumbent_energy) + "," + format_full(global[k]) + "\n";
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json j = {{"iteration", r.iteration},
                          {"incumbent", to_bitstring(r.incumbent)},
                          {"incumbent_energy", r.incumbent_energy},
                          {"batch_best_energy", r.batch_best_energy},
                          {"batch_size", r.batch_size}};
      if (r.mean_overlap) j["mean_overlap"] = *r.mean_overlap;
      recs.push_back(std::move(j));
    }
    nlohmann::json j = {{"protocol", protocol},
                        {"sampler", sampler},
                        {"seed", seed},
                        {"iteration_seeds", iteration_seeds},
                        {"best_state", to_bitstring(best_state)},
                        {"best_energy", best_energy},
                        {"records", std::move(recs)}};
    if (s) j["s"] = *s;
    return j;
  }

  std::string checksum() const {
    std::string text = to_csv();
    for (const auto& r : records) text += to_bitstring(r.incumbent) + "\n";
    return sha256_hex(text);
  }
};

/// A sampler failed mid-chain; `trace()` holds every iteration completed before it.
class ChainAborted : public std::runtime_error {
 public:
  ChainAborted(const std::string& what, ChainTrace partial)
      : std::runtime_error(what), trace_(std::move(partial)) {}
  const ChainTrace& trace() const noexcept { return trace_; }

 private:
  ChainTrace trace_;
};

inline std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration) {
  return derive_seed(seed, {0x17e5a7ULL, iteration});
}

/// Random starting vector used by iteration 0 of the warm-start protocol.
inline BinaryState warm_start_initial_state(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(derive_seed(seed, {0x1417ULL}));
  return detail::random_state(n, rng);
}

namespace detail {

inline double mean_overlap(const SampleSet& set, const BinaryState& from) {
  double sum = 0.0;
  for (const auto& r : set.records()) sum += overlap(r.state, from) * static_cast<double>(r.count);
  return sum / static_cast<double>(set.num_reads());
}

inline void push_record(ChainTrace& trace, ChainRecord record, const SampleSet& set) {
  const auto& best = set.lowest();
  if (best.energy < trace.best_energy) {
    trace.best_energy = best.energy;
    trace.best_state = best.state;
  }
  trace.records.push_back(std::move(record));
}

template <typename Fn>
SampleSet run_or_abort(ChainTrace& trace, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw ChainAborted(std::string("chain aborted at iteration ") +
                           std::to_string(trace.records.size()) + ": " + e.what(),
                       trace);
  }
}

}  // namespace detail

struct WarmStartOptions {
  std::size_t iterations = 100;
  /// Reads per run; one NEBM read is one full simulation.
  std::size_t reads_per_iteration = 1;
  std::size_t workers = 1;
};

/// Iteration 0 starts from a seeded random vector; every later run starts from
/// the best state of the previous run.
inline ChainTrace iterated_warm_start(const QuboProblem& problem, const Sampler& sampler,
                                      std::uint64_t seed, const WarmStartOptions& options = {}) {
  if (options.iterations == 0) throw ConfigError("warm start needs at least one iteration");
  ChainTrace trace;
  trace.protocol = "warm-start";
  trace.sampler = sampler.name();
  trace.seed = seed;
  BinaryState start = warm_start_initial_state(problem.size(), seed);
  for (std::size_t k = 0; k < options.iterations; ++k) {
    const std::uint64_t child = iteration_seed(seed, k);
    trace.iteration_seeds.push_back(child);
    SampleSet set = detail::run_or_abort(trace, [&] {
      return sampler.sample(
          {problem, options.reads_per_iteration, start, child, options.workers});
    });
    const auto& best = set.lowest();
    ChainRecord rec{k, best.state, best.energy, best.energy, set.num_reads(),
                    detail::mean_overlap(set, start)};
    start = best.state;
    detail::push_record(trace, std::move(rec), set);
  }
  return trace;
}

struct QemcOptions {
  std::size_t iterations = 100;
  std::size_t batch = 1000;
  /// Keep the better of (incumbent, batch best) instead of always moving to the batch best.
  bool elitist = false;
  std::size_t workers = 1;
};

/// Record 0 is the cold-start batch drawn by `cold_start` without an initial
/// state; records 1..iterations are batches started from the incumbent.
inline ChainTrace qemc_chain(const QuboProblem& problem, const Sampler& sampler,
                             const Sampler& cold_start, std::uint64_t seed,
                             const QemcOptions& options = {}) {
  if (options.batch == 0) throw ConfigError("QEMC batch size must be positive");
  ChainTrace trace;
  trace.protocol = "qemc";
  trace.sampler = sampler.name();
  trace.seed = seed;
  if (auto params = sampler.parameters(); params.contains("s")) trace.s = params["s"].get<double>();

  const std::uint64_t cold_seed = iteration_seed(seed, 0);
  trace.iteration_seeds.push_back(cold_seed);
  SampleSet cold = detail::run_or_abort(trace, [&] {
    return cold_start.sample({problem, options.batch, std::nullopt, cold_seed, options.workers});
  });
  BinaryState incumbent = cold.lowest().state;
  double incumbent_energy = cold.lowest().energy;
  detail::push_record(trace,
                      {0, incumbent, incumbent_energy, incumbent_energy, cold.num_reads(), {}},
                      cold);

  for (std::size_t k = 1; k <= options.iterations; ++k) {
    const std::uint64_t child = iteration_seed(seed, k);
    trace.iteration_seeds.push_back(child);
    SampleSet set = detail::run_or_abort(trace, [&] {
      return sampler.sample({problem, options.batch, incumbent, child, options.workers});
    });
    const auto& best = set.lowest();
    const double overlap_mean = detail::mean_overlap(set, incumbent);
    if (!options.elitist || best.energy < incumbent_energy) {
      incumbent = best.state;
      incumbent_energy = best.energy;
    }
    detail::push_record(
        trace, {k, incumbent, incumbent_energy, best.energy, set.num_reads(), overlap_mean}, set);
  }
  return trace;
}

inline ChainTrace qemc_chain(const QuboProblem& problem, const Sampler& sampler, std::uint64_t seed,
                             const QemcOptions& options = {}) {
  return qemc_chain(problem, sampler, sampler, seed, options);
}

}  // namespace sparsequbo
