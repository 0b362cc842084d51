#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparsequbo/error.hpp"
#include "sparsequbo/format.hpp"
#include "sparsequbo/random.hpp"
#include "sparsequbo/samplers/sampler.hpp"
#include "sparsequbo/sparse_coding.hpp"

namespace sparsequbo {

struct LearnConfig {
  std::size_t atoms = 64;
  double s_target = 0.15;        ///< target mean fraction of active atoms, in (0, 1)
  double lambda_init = 0.01;
  double lambda_growth = 1.1;
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  double convergence_tol = 1e-3;  ///< relative change of both error and sparsity
  std::uint64_t seed = 0;
  /// Patches coded against a frozen dictionary before one aggregated update.
  std::size_t batch_size = 1;
  std::size_t reads = 1;          ///< num_reads passed to the coding sampler
  QuboMode mode = QuboMode::paper;
};

inline void validate(const LearnConfig& c) {
  if (c.atoms == 0) throw ConfigError("dictionary needs at least one atom");
  if (!(c.s_target > 0.0 && c.s_target < 1.0)) throw ConfigError("s_target must lie in (0, 1)");
  if (!(c.lambda_init > 0.0)) throw ConfigError("lambda_init must be positive");
  if (!(c.lambda_growth > 1.0)) throw ConfigError("lambda_growth must exceed 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (c.epochs == 0) throw ConfigError("epochs must be positive");
  if (!(c.convergence_tol > 0.0)) throw ConfigError("convergence_tol must be positive");
  if (c.batch_size == 0 || c.reads == 0) throw ConfigError("batch_size and reads must be positive");
}

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_error = 0.0;     ///< mean |x - Da|^2 / 2 at coding time
  double mean_sparsity = 0.0;  ///< mean fraction of active atoms
  double lambda = 0.0;         ///< penalty used during this epoch
};

struct LearnTrace {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const {
    std::string out = "epoch,mean_error,mean_sparsity,lambda\n";
    for (const auto& e : epochs) {
      out += std::to_string(e.epoch) + "," + format_full(e.mean_error) + "," +
             format_full(e.mean_sparsity) + "," + format_full(e.lambda) + "\n";
    }
    return out;
  }
};

struct LearnResult {
  Dictionary dictionary;
  LearnTrace trace;
  double lambda_final = 0.0;  ///< penalty of the last completed epoch
  bool converged = false;
};

/// Gaussian atoms rescaled so each norm is an independent uniform draw from (0, 1).
inline Dictionary init_dictionary(std::size_t m, std::size_t p, std::uint64_t seed) {
  Dictionary dict(m, p);
  Rng rng = make_rng(derive_seed(seed, {0xd1c7ULL}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < p; ++i) {
    auto atom = dict.atom(i);
    double norm = 0.0;
    do {
      for (auto& v : atom) v = normal(rng);
      norm = std::sqrt(dot(atom, atom));
    } while (norm == 0.0);
    double target = 0.0;
    while (target == 0.0) target = uniform01(rng);
    for (auto& v : atom) v *= target / norm;
  }
  return dict;
}

inline bool relative_change_below(double previous, double current, double tol) {
  const double scale = std::max(std::abs(previous), 1e-12);
  return std::abs(current - previous) / scale < tol;
}

/// Alternates binary sparse coding of every patch with the Hebbian update
/// D_i <- D_i + eta * (x - Da) for active atoms, raising lambda while the mean
/// sparsity stays above target. Stops after `epochs` or once successive epochs
/// change both mean error and mean sparsity by less than `convergence_tol`.
inline LearnResult train(std::span<const ImagePatch> patches, const LearnConfig& config,
                         const Sampler& solver, std::optional<Dictionary> initial = std::nullopt) {
  validate(config);
  if (patches.empty()) throw ConfigError("training set is empty");
  const std::size_t m = patches.front().values.size();
  for (const auto& p : patches) {
    if (p.values.size() != m) throw DimensionError("training patches differ in length");
  }
  LearnResult result;
  result.dictionary = initial ? std::move(*initial) : init_dictionary(m, config.atoms, config.seed);
  Dictionary& dict = result.dictionary;
  if (dict.dim() != m || dict.atoms() != config.atoms) {
    throw DimensionError("initial dictionary shape does not match patches/config");
  }

  double lambda = config.lambda_init;
  std::vector<std::size_t> order(patches.size());
  std::vector<double> update(dict.values().size());
  std::vector<std::uint8_t> touched(config.atoms);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(derive_seed(config.seed, {0x5aff1eULL, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double error_sum = 0.0, sparsity_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(update.begin(), update.end(), 0.0);
      std::fill(touched.begin(), touched.end(), std::uint8_t{0});
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x = patches[order[k]].values;
        const QuboProblem qubo = build_qubo(x, dict, lambda, config.mode);
        const SampleSet codes = solver.sample(
            {qubo, config.reads, std::nullopt, derive_seed(config.seed, {epoch, order[k]})});
        const BinaryState& a = codes.lowest().state;
        const auto recon = reconstruct_values(dict, a);
        double sq = 0.0;
        for (std::size_t d = 0; d < m; ++d) sq += (x[d] - recon[d]) * (x[d] - recon[d]);
        error_sum += 0.5 * sq;
        sparsity_sum += static_cast<double>(popcount(a)) / static_cast<double>(config.atoms);
        for (std::size_t i = 0; i < config.atoms; ++i) {
          if (!a[i]) continue;
          touched[i] = 1;
          for (std::size_t d = 0; d < m; ++d) {
            update[i * m + d] += config.learning_rate * (x[d] - recon[d]);
          }
        }
      }
      for (std::size_t i = 0; i < config.atoms; ++i) {
        if (!touched[i]) continue;
        auto atom = dict.atom(i);
        for (std::size_t d = 0; d < m; ++d) atom[d] += update[i * m + d];
      }
    }

    const auto count = static_cast<double>(patches.size());
    const EpochRecord record{epoch, error_sum / count, sparsity_sum / count, lambda};
    result.trace.epochs.push_back(record);
    result.lambda_final = lambda;

    if (result.trace.epochs.size() >= 2) {
      const auto& prev = result.trace.epochs[result.trace.epochs.size() - 2];
      if (relative_change_below(prev.mean_error, record.mean_error, config.convergence_tol) &&
          relative_change_below(prev.mean_sparsity, record.mean_sparsity,
                                config.convergence_tol)) {
        result.converged = true;
        break;
      }
    }
    if (record.mean_sparsity > config.s_target) lambda *= config.lambda_growth;
  }
  return result;
}

}  // namespace sparsequbo
