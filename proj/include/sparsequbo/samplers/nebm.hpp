#pragma once

// Software simulation of a Non-equilibrium Boltzmann Machine (NEBM) sampler.
//
// Per step, for every neuron i (synchronous update from the previous spikes):
//   r_i <- rho * r_i + a_i
//   v_i <- alpha * v_i - (h_i + sum_j Q_ij a_j) - kappa * r_i_prev / 2^k_i + gamma * eta_i
//   a_i ~ Bernoulli(sigmoid(v_i / T))   unless neuron i is inside a hold window
// The drive is the negated local field, so firing is favoured exactly when
// switching the bit on lowers the QUBO energy. eta is standard logistic noise.
// After an output change a neuron keeps its new value for its hold duration.
// T steps down from T_max to T_min, holding each level for steps_per_temperature
// steps, then restarts (cyclic) or stays at T_min (hold_at_floor).

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsequbo/error.hpp"
#include "sparsequbo/qubo.hpp"
#include "sparsequbo/samplers/sampler.hpp"

namespace sparsequbo {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

enum class TemperatureCycle { cyclic, hold_at_floor };

struct NebmConfig {
  double t_max = 15.0;
  double delta_t = 1.0;
  std::size_t steps_per_temperature = 20;
  std::size_t total_steps = 6000;
  std::size_t sample_interval = 20;
  double alpha = 0.5;
  double gamma = 1.0;
  double rho = 0.7;
  double kappa = 1.0;
  /// Hold duration after an output change, drawn per neuron per run. {0,0} disables holds.
  IntRange refract_hold{5, 10};
  /// Refractory penalty divisor exponent k (penalty kappa * r / 2^k), drawn per neuron per run.
  IntRange refract_scaling{4, 8};
  double t_min = 1.0;
  TemperatureCycle cycle = TemperatureCycle::cyclic;
  /// Accepted for completeness; the stochastic activation does not use it.
  std::optional<double> threshold;
};

inline void validate(const NebmConfig& c) {
  if (!(c.t_max > 0.0) || !(c.t_min > 0.0) || !(c.t_max > c.t_min)) {
    throw ConfigError("NEBM requires T_max > T_min > 0");
  }
  if (!(c.delta_t > 0.0)) throw ConfigError("NEBM delta_T must be positive");
  if (c.steps_per_temperature == 0 || c.total_steps == 0 || c.sample_interval == 0) {
    throw ConfigError("NEBM step counts must be positive");
  }
  if (c.total_steps % c.sample_interval != 0) {
    throw ConfigError("NEBM sample_interval must divide total_steps");
  }
  if (!(c.alpha >= 0.0 && c.alpha < 1.0)) throw ConfigError("NEBM alpha must lie in [0, 1)");
  if (!(c.rho > 0.0 && c.rho < 1.0)) throw ConfigError("NEBM rho must lie in (0, 1)");
  if (!(c.gamma >= 0.0) || !(c.kappa >= 0.0)) throw ConfigError("NEBM gamma, kappa must be >= 0");
  if (c.refract_hold.lo < 0 || c.refract_hold.lo > c.refract_hold.hi) {
    throw ConfigError("NEBM refract hold range must satisfy 0 <= lo <= hi");
  }
  if (c.refract_scaling.lo < 0 || c.refract_scaling.lo > c.refract_scaling.hi) {
    throw ConfigError("NEBM refract scaling range must satisfy 0 <= lo <= hi");
  }
}

/// Number of distinct temperature levels in one anneal.
inline std::size_t nebm_levels(const NebmConfig& c) {
  return static_cast<std::size_t>(std::floor((c.t_max - c.t_min) / c.delta_t + 1e-9)) + 1;
}

inline double nebm_temperature(const NebmConfig& c, std::size_t step) {
  const std::size_t levels = nebm_levels(c);
  std::size_t level = step / c.steps_per_temperature;
  level = c.cycle == TemperatureCycle::cyclic ? level % levels : std::min(level, levels - 1);
  return c.t_max - c.delta_t * static_cast<double>(level);
}

struct NebmState {
  std::vector<double> v;        ///< membrane potentials
  BinaryState a;                ///< spike outputs
  std::vector<double> r;        ///< refractory traces
  std::vector<int> hold;        ///< remaining forced-hold steps
  std::size_t t = 0;            ///< steps taken
  double temperature = 0.0;     ///< temperature used for the next step
};

/// One NEBM run. Exposed so the dynamics can be stepped and inspected directly.
class NebmSimulator {
 public:
  NebmSimulator(const QuboProblem& problem, const NebmConfig& config, BinaryState initial, Rng& rng)
      : problem_(&problem), config_(config), rng_(&rng) {
    validate(config_);
    validate_state(problem, initial);
    const std::size_t n = problem.size();
    state_.v.assign(n, 0.0);
    state_.a = std::move(initial);
    state_.r.assign(n, 0.0);
    state_.hold.assign(n, 0);
    state_.temperature = nebm_temperature(config_, 0);
    hold_duration_.resize(n);
    penalty_scale_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      hold_duration_[i] = draw(config_.refract_hold);
      penalty_scale_[i] = config_.kappa / std::ldexp(1.0, draw(config_.refract_scaling));
    }
    field_.resize(n);
  }

  void step() {
    const std::size_t n = state_.a.size();
    for (std::size_t i = 0; i < n; ++i) field_[i] = local_field(*problem_, state_.a, i);
    const double temperature = state_.temperature;
    for (std::size_t i = 0; i < n; ++i) {
      const double r_prev = state_.r[i];
      state_.r[i] = config_.rho * r_prev + state_.a[i];
      double noise = config_.gamma > 0.0 ? config_.gamma * logistic_noise(*rng_) : 0.0;
      state_.v[i] = config_.alpha * state_.v[i] - field_[i] - penalty_scale_[i] * r_prev + noise;
      if (state_.hold[i] > 0) {
        --state_.hold[i];
        continue;
      }
      const double p_fire = 1.0 / (1.0 + std::exp(-state_.v[i] / temperature));
      const std::uint8_t next = uniform01(*rng_) < p_fire ? 1 : 0;
      if (next != state_.a[i]) {
        state_.a[i] = next;
        state_.hold[i] = hold_duration_[i];
      }
    }
    ++state_.t;
    state_.temperature = nebm_temperature(config_, state_.t);
  }

  const NebmState& state() const noexcept { return state_; }
  const std::vector<int>& hold_durations() const noexcept { return hold_duration_; }

 private:
  int draw(IntRange range) {
    if (range.lo == range.hi) return range.lo;
    const auto span = static_cast<std::uint64_t>(range.hi - range.lo + 1);
    return range.lo + static_cast<int>((*rng_)() % span);
  }

  const QuboProblem* problem_;
  NebmConfig config_;
  Rng* rng_;
  NebmState state_;
  std::vector<int> hold_duration_;
  std::vector<double> penalty_scale_;
  std::vector<double> field_;
};

inline nlohmann::json to_json(const NebmConfig& c) {
  nlohmann::json j = {{"t_max", c.t_max},
                      {"t_min", c.t_min},
                      {"delta_t", c.delta_t},
                      {"steps_per_temperature", c.steps_per_temperature},
                      {"total_steps", c.total_steps},
                      {"sample_interval", c.sample_interval},
                      {"alpha", c.alpha},
                      {"gamma", c.gamma},
                      {"rho", c.rho},
                      {"kappa", c.kappa},
                      {"refract_hold", {c.refract_hold.lo, c.refract_hold.hi}},
                      {"refract_scaling", {c.refract_scaling.lo, c.refract_scaling.hi}},
                      {"cycle", c.cycle == TemperatureCycle::cyclic ? "cyclic" : "hold_at_floor"}};
  if (c.threshold) j["threshold"] = *c.threshold;
  return j;
}

/// Each read is one full run contributing total_steps / sample_interval samples.
inline SampleSet nebm_sample(const SamplerRequest& request, const NebmConfig& config = {}) {
  validate_request(request);
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  const auto& problem = request.problem;
  auto reads = detail::run_reads(request, [&](std::size_t, Rng& rng) {
    BinaryState init = request.initial_state ? *request.initial_state
                                             : detail::random_state(problem.size(), rng);
    NebmSimulator sim(problem, config, std::move(init), rng);
    std::vector<detail::ReadSample> samples;
    samples.reserve(config.total_steps / config.sample_interval);
    for (std::size_t t = 0; t < config.total_steps; ++t) {
      sim.step();
      if (sim.state().t % config.sample_interval == 0) samples.push_back({sim.state().a, std::nullopt});
    }
    return samples;
  });
  return detail::collect(request, reads, {"nebm", request.seed, to_json(config), 0.0}, started);
}

class NebmSampler final : public Sampler {
 public:
  explicit NebmSampler(NebmConfig config = {}) : config_(std::move(config)) { validate(config_); }
  std::string name() const override { return "nebm"; }
  nlohmann::json parameters() const override { return to_json(config_); }
  SampleSet sample(const SamplerRequest& request) const override {
    return nebm_sample(request, config_);
  }
  const NebmConfig& config() const noexcept { return config_; }

 private:
  NebmConfig config_;
};

}  // namespace sparsequbo
