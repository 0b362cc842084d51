#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsequbo/error.hpp"
#include "sparsequbo/qubo.hpp"
#include "sparsequbo/samplers/sampler.hpp"

namespace sparsequbo {

struct BetaRange {
  double hot = 0.0;   ///< initial (smallest) inverse temperature
  double cold = 0.0;  ///< final (largest) inverse temperature
};

enum class BetaSchedule { geometric, linear };

inline BetaSchedule parse_beta_schedule(const std::string& text) {
  if (text == "geometric") return BetaSchedule::geometric;
  if (text == "linear") return BetaSchedule::linear;
  throw ConfigError("unknown beta schedule '" + text + "' (expected geometric or linear)");
}

inline std::string to_string(BetaSchedule s) {
  return s == BetaSchedule::geometric ? "geometric" : "linear";
}

struct SaConfig {
  std::size_t sweeps = 1000;
  BetaSchedule schedule = BetaSchedule::geometric;
  std::optional<BetaRange> beta_range;
  std::size_t reads = 1000;
};

inline void validate(const BetaRange& range) {
  if (!(range.hot > 0.0) || !(range.cold > 0.0) || !std::isfinite(range.hot) ||
      !std::isfinite(range.cold)) {
    throw ConfigError("beta range bounds must be finite and positive");
  }
  if (!(range.hot < range.cold)) throw ConfigError("beta range requires hot < cold");
}

inline void validate(const SaConfig& config) {
  if (config.sweeps == 0) throw ConfigError("sweeps must be positive");
  if (config.beta_range) validate(*config.beta_range);
}

/// Coefficient-derived range: a flip of the stiffest variable is accepted with
/// probability 1/2 at the hot end; the weakest nonzero coefficient is accepted
/// with probability 1/100 at the cold end.
inline BetaRange default_beta_range(const QuboProblem& problem) {
  const std::size_t n = problem.size();
  std::vector<double> stiffness(n);
  double weakest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double h = std::abs(problem.linear()[i]);
    stiffness[i] = h;
    if (h > 0.0) weakest = std::min(weakest, h);
  }
  for (const auto& t : problem.quadratic()) {
    const double q = std::abs(t.value);
    stiffness[t.i] += q;
    stiffness[t.j] += q;
    if (q > 0.0) weakest = std::min(weakest, q);
  }
  const double stiffest = *std::max_element(stiffness.begin(), stiffness.end());
  if (stiffest == 0.0) return {std::log(2.0), std::log(100.0)};
  constexpr double kEpsilon = 1e-9;
  BetaRange range{std::log(2.0) / stiffest, std::log(100.0) / std::max(weakest, kEpsilon)};
  if (!(range.hot < range.cold)) range.cold = range.hot * 50.0;
  return range;
}

/// One beta per sweep, each used once, from `hot` to `cold`.
inline std::vector<double> beta_schedule(BetaSchedule kind, BetaRange range, std::size_t sweeps) {
  std::vector<double> betas(sweeps);
  if (sweeps == 1) {
    betas[0] = range.hot;
    return betas;
  }
  for (std::size_t k = 0; k < sweeps; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(sweeps - 1);
    betas[k] = kind == BetaSchedule::geometric ? range.hot * std::pow(range.cold / range.hot, f)
                                               : range.hot + (range.cold - range.hot) * f;
  }
  return betas;
}

namespace detail {

/// Single-spin-flip Metropolis walker with cached local fields.
class MetropolisWalker {
 public:
  MetropolisWalker(const QuboProblem& problem, BinaryState state)
      : problem_(&problem), state_(std::move(state)), field_(problem.size()) {
    for (std::size_t i = 0; i < field_.size(); ++i) field_[i] = local_field(problem, state_, i);
    energy_ = sparsequbo::energy(problem, state_);
  }

  /// One sweep in index order at inverse temperature `beta`.
  void sweep(double beta, Rng& rng) {
    // Beyond this exponent the acceptance probability is below 2^-53.
    constexpr double kRejectExponent = 40.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      const double delta = state_[i] ? -field_[i] : field_[i];
      if (delta > 0.0) {
        const double x = beta * delta;
        if (x > kRejectExponent) continue;
        if (uniform01(rng) >= std::exp(-x)) continue;
      }
      flip(i, delta);
    }
  }

  const BinaryState& state() const noexcept { return state_; }
  double energy() const noexcept { return energy_; }

 private:
  void flip(std::size_t i, double delta) {
    const double sign = state_[i] ? -1.0 : 1.0;
    state_[i] ^= 1;
    energy_ += delta;
    for (const auto& nb : problem_->neighbors(i)) field_[nb.index] += sign * nb.weight;
  }

  const QuboProblem* problem_;
  BinaryState state_;
  std::vector<double> field_;
  double energy_ = 0.0;
};

}  // namespace detail

inline nlohmann::json to_json(const SaConfig& config, const BetaRange& range) {
  return {{"sweeps", config.sweeps},
          {"schedule", to_string(config.schedule)},
          {"beta_hot", range.hot},
          {"beta_cold", range.cold},
          {"beta_range_auto", !config.beta_range.has_value()}};
}

/// Metropolis sweeps under a beta schedule; one final state per read.
inline SampleSet simulated_annealing(const SamplerRequest& request, const SaConfig& config = {}) {
  validate_request(request);
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  const BetaRange range = config.beta_range.value_or(default_beta_range(request.problem));
  const auto betas = beta_schedule(config.schedule, range, config.sweeps);
  const auto& problem = request.problem;
  auto reads = detail::run_reads(request, [&](std::size_t, Rng& rng) {
    BinaryState init = request.initial_state ? *request.initial_state
                                             : detail::random_state(problem.size(), rng);
    detail::MetropolisWalker walker(problem, std::move(init));
    for (double beta : betas) walker.sweep(beta, rng);
    return std::vector<detail::ReadSample>{{walker.state(), walker.energy()}};
  });
  return detail::collect(request, reads, {"sa", request.seed, to_json(config, range), 0.0},
                         started);
}

class SimulatedAnnealingSampler final : public Sampler {
 public:
  explicit SimulatedAnnealingSampler(SaConfig config = {}) : config_(std::move(config)) {
    validate(config_);
  }

  std::string name() const override { return "sa"; }
  nlohmann::json parameters() const override {
    nlohmann::json j = {{"sweeps", config_.sweeps}, {"schedule", to_string(config_.schedule)}};
    if (config_.beta_range) {
      j["beta_hot"] = config_.beta_range->hot;
      j["beta_cold"] = config_.beta_range->cold;
    }
    return j;
  }
  SampleSet sample(const SamplerRequest& request) const override {
    return simulated_annealing(request, config_);
  }
  const SaConfig& config() const noexcept { return config_; }

 private:
  SaConfig config_;
};

}  // namespace sparsequbo
