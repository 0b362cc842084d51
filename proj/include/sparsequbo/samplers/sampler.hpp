#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sparsequbo/qubo.hpp"
#include "sparsequbo/random.hpp"
#include "sparsequbo/sample_set.hpp"

namespace sparsequbo {

struct SamplerRequest {
  const QuboProblem& problem;
  std::size_t num_reads = 1;
  std::optional<BinaryState> initial_state;
  std::uint64_t seed = 0;
  /// Threads used for independent reads. Output does not depend on it.
  std::size_t workers = 1;
};

inline void validate_request(const SamplerRequest& request) {
  if (request.num_reads == 0) throw ConfigError("num_reads must be positive");
  if (request.initial_state) validate_state(request.problem, *request.initial_state);
}

/// Uniform contract for every sampler: one request in, one SampleSet out.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::string name() const = 0;
  virtual nlohmann::json parameters() const = 0;
  virtual SampleSet sample(const SamplerRequest& request) const = 0;
};

/// Runs body(k) for k in [0, count) on up to `workers` threads.
/// Each index is visited exactly once; the first exception is rethrown.
inline void parallel_for_index(std::size_t count, std::size_t workers,
                               const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < count; k += workers) body(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

struct ReadSample {
  BinaryState state;
  /// Incrementally tracked energy, re-verified on insertion when present.
  std::optional<double> energy;
};

/// Executes `read(k, rng)` for every read with a per-read RNG stream derived
/// from (seed, k); results come back in read order.
template <typename ReadFn>
std::vector<std::vector<ReadSample>> run_reads(const SamplerRequest& request, ReadFn&& read) {
  std::vector<std::vector<ReadSample>> per_read(request.num_reads);
  parallel_for_index(request.num_reads, request.workers, [&](std::size_t k) {
    Rng rng = make_rng(derive_seed(request.seed, {k}));
    per_read[k] = read(k, rng);
  });
  return per_read;
}

inline BinaryState random_state(std::size_t n, Rng& rng) {
  BinaryState s(n);
  for (auto& bit : s) bit = static_cast<std::uint8_t>(rng() >> 63);
  return s;
}

inline SampleSet collect(const SamplerRequest& request,
                         const std::vector<std::vector<ReadSample>>& per_read,
                         SampleMetadata metadata,
                         std::chrono::steady_clock::time_point started) {
  SampleSet::Builder builder(request.problem);
  for (const auto& states : per_read) {
    for (const auto& s : states) {
      if (s.energy) {
        builder.add(s.state, *s.energy);
      } else {
        builder.add(s.state);
      }
    }
  }
  metadata.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return std::move(builder).build(std::move(metadata));
}

}  // namespace detail

}  // namespace sparsequbo
