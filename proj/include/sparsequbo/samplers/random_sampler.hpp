#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "sparsequbo/samplers/sampler.hpp"

namespace sparsequbo {

/// Uniform i.i.d. states; the baseline for comparisons and random initialisation.
inline SampleSet random_sampler(const SamplerRequest& request) {
  validate_request(request);
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = request.problem.size();
  auto reads = detail::run_reads(request, [n](std::size_t, Rng& rng) {
    return std::vector<detail::ReadSample>{{detail::random_state(n, rng), std::nullopt}};
  });
  return detail::collect(request, reads, {"random", request.seed, nlohmann::json::object(), 0.0},
                         started);
}

class RandomSampler final : public Sampler {
 public:
  std::string name() const override { return "random"; }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }
  SampleSet sample(const SamplerRequest& request) const override { return random_sampler(request); }
};

}  // namespace sparsequbo
