#pragma once

#include <bit>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sparsequbo/error.hpp"
#include "sparsequbo/qubo.hpp"
#include "sparsequbo/samplers/sampler.hpp"

namespace sparsequbo {

/// Largest problem `brute_force` will enumerate.
inline constexpr std::size_t kBruteForceMaxVariables = 30;

struct BruteForceResult {
  double energy = 0.0;
  /// Every state within 1e-9 of the minimum, in Gray-code enumeration order.
  std::vector<BinaryState> optimal_states;
  /// True when more optima existed than `max_states` allowed to be stored.
  bool truncated = false;
};

/// Exact minimum by Gray-code enumeration of all 2^n states with O(deg) updates.
/// Energies of the reported optima are recomputed with `energy()`.
inline BruteForceResult brute_force(const QuboProblem& problem, std::size_t max_states = 1u << 16) {
  const std::size_t n = problem.size();
  if (n > kBruteForceMaxVariables) {
    throw ConfigError("brute force refuses n=" + std::to_string(n) + " (limit is " +
                      std::to_string(kBruteForceMaxVariables) + " variables)");
  }
  BinaryState state(n, 0);
  std::vector<double> field(problem.linear().begin(), problem.linear().end());
  double e = problem.offset();

  BruteForceResult result;
  result.energy = e;
  result.optimal_states.push_back(state);

  // Candidates within a slightly wider window survive drift in the running sum;
  // the final filter uses exact energies.
  constexpr double kWindow = 4 * kEnergyTolerance;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const auto i = static_cast<std::size_t>(std::countr_zero(k));
    const double delta = state[i] ? -field[i] : field[i];
    e += delta;
    const double sign = state[i] ? -1.0 : 1.0;
    state[i] ^= 1;
    for (const auto& nb : problem.neighbors(i)) field[nb.index] += sign * nb.weight;

    if (e < result.energy - kWindow) {
      result.energy = e;
      result.optimal_states.clear();
      result.optimal_states.push_back(state);
      result.truncated = false;
    } else if (e <= result.energy + kWindow) {
      if (e < result.energy) result.energy = e;
      if (result.optimal_states.size() < max_states) {
        result.optimal_states.push_back(state);
      } else {
        result.truncated = true;
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> exact(result.optimal_states.size());
  for (std::size_t s = 0; s < exact.size(); ++s) {
    exact[s] = energy(problem, result.optimal_states[s]);
    best = std::min(best, exact[s]);
  }
  std::vector<BinaryState> kept;
  for (std::size_t s = 0; s < exact.size(); ++s) {
    if (exact[s] <= best + kEnergyTolerance) kept.push_back(std::move(result.optimal_states[s]));
  }
  result.energy = best;
  result.optimal_states = std::move(kept);
  return result;
}

/// Sampler view of `brute_force`: one read per optimal state; num_reads and seed are ignored.
class BruteForceSampler final : public Sampler {
 public:
  explicit BruteForceSampler(std::size_t max_states = 1u << 16) : max_states_(max_states) {}

  std::string name() const override { return "brute"; }
  nlohmann::json parameters() const override { return {{"max_states", max_states_}}; }

  SampleSet sample(const SamplerRequest& request) const override {
    validate_request(request);
    const auto started = std::chrono::steady_clock::now();
    auto result = brute_force(request.problem, max_states_);
    std::vector<std::vector<detail::ReadSample>> reads(1);
    for (auto& s : result.optimal_states) reads[0].push_back({std::move(s), result.energy});
    return detail::collect(request, reads, {name(), request.seed, parameters(), 0.0}, started);
  }

 private:
  std::size_t max_states_;
};

}  // namespace sparsequbo
