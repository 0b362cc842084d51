#pragma once

// Seeded synthetic sparse-coding instances shared by the unit and acceptance suites.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <random>
#include <vector>

#include "sparsequbo/qubo.hpp"
#include "sparsequbo/random.hpp"
#include "sparsequbo/sparse_coding.hpp"

namespace sparsequbo::testing {

struct CodingInstance {
  Dictionary dictionary;
  std::vector<double> patch;
  std::vector<std::size_t> planted;  ///< atoms summed into the patch
  double lambda = 0.1;
};

struct InstanceShape {
  std::size_t p = 16;
  std::size_t m = 49;
  double lambda = 0.1;
  std::size_t planted = 4;
  double amplitude = 2.0;  ///< weight of each planted atom in the patch
  double shared = 0.5;     ///< weight of a component common to all atoms (correlation)
  double noise = 0.2;
  double norm_lo = 1.0;
  double norm_hi = 2.5;
};

/// Atoms are Gaussian plus a shared direction, rescaled to norms uniform in
/// [norm_lo, norm_hi]; the patch is amplitude * (sum of `planted` distinct atoms)
/// plus Gaussian noise.
inline CodingInstance random_coding_instance(std::uint64_t seed, const InstanceShape& shape = {}) {
  const std::size_t p = shape.p, m = shape.m;
  Rng rng = make_rng(derive_seed(seed, {0xc0deULL}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> common(m);
  for (auto& v : common) v = normal(rng);
  Dictionary dict(m, p);
  const double norm_lo = shape.norm_lo, norm_hi = shape.norm_hi;
  for (std::size_t i = 0; i < p; ++i) {
    auto atom = dict.atom(i);
    for (std::size_t d = 0; d < m; ++d) atom[d] = normal(rng) + shape.shared * common[d];
    const double norm = std::sqrt(dot(atom, atom));
    const double target = norm_lo + (norm_hi - norm_lo) * uniform01(rng);
    for (auto& v : atom) v *= target / norm;
  }
  std::vector<std::size_t> pool(p);
  for (std::size_t i = 0; i < p; ++i) pool[i] = i;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(shape.planted, p));
  std::vector<double> x(m, 0.0);
  for (auto i : pool) {
    for (std::size_t d = 0; d < m; ++d) x[d] += shape.amplitude * dict.atom(i)[d];
  }
  for (auto& v : x) v += shape.noise * normal(rng);
  return {std::move(dict), std::move(x), std::move(pool), shape.lambda};
}

/// QUBO of `random_coding_instance`.
inline QuboProblem random_coding_qubo(std::uint64_t seed, const InstanceShape& shape = {},
                                      QuboMode mode = QuboMode::paper) {
  auto inst = random_coding_instance(seed, shape);
  return build_qubo(inst.patch, inst.dictionary, inst.lambda, mode);
}

struct PlantedData {
  Dictionary hidden;
  std::vector<ImagePatch> patches;
};

/// Patches that are each the sum of 1..max_atoms distinct atoms of a hidden
/// Gaussian dictionary whose atom norms are uniform in [norm_lo, norm_hi].
inline PlantedData planted_patches(std::uint64_t seed, std::size_t count, std::size_t p = 16,
                                   std::size_t m = 49, std::size_t max_atoms = 3,
                                   double norm_lo = 1.0, double norm_hi = 2.0) {
  Rng rng = make_rng(derive_seed(seed, {0x91a7ULL}));
  std::normal_distribution<double> normal(0.0, 1.0);
  PlantedData out{Dictionary(m, p), {}};
  for (std::size_t i = 0; i < p; ++i) {
    auto atom = out.hidden.atom(i);
    for (auto& v : atom) v = normal(rng);
    const double scale = (norm_lo + (norm_hi - norm_lo) * uniform01(rng)) / std::sqrt(dot(atom, atom));
    for (auto& v : atom) v *= scale;
  }
  std::vector<std::size_t> pool(p);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < p; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t used = 1 + static_cast<std::size_t>(rng() % max_atoms);
    ImagePatch patch{std::vector<double>(m, 0.0), k, 0, 7};
    for (std::size_t u = 0; u < used; ++u) {
      const auto atom = out.hidden.atom(pool[u]);
      for (std::size_t d = 0; d < m; ++d) patch.values[d] += atom[d];
    }
    out.patches.push_back(std::move(patch));
  }
  return out;
}

/// Dense random QUBO with coefficients uniform in [-scale, scale].
inline QuboProblem random_qubo(std::uint64_t seed, std::size_t n, double density = 0.5,
                               double scale = 1.0) {
  Rng rng = make_rng(derive_seed(seed, {0x9ab0ULL}));
  std::vector<double> h(n);
  for (auto& v : h) v = scale * (2.0 * uniform01(rng) - 1.0);
  std::vector<QuadraticTerm> q;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (uniform01(rng) < density) q.push_back({i, j, scale * (2.0 * uniform01(rng) - 1.0)});
    }
  }
  return QuboProblem(n, std::move(h), std::move(q), scale * (2.0 * uniform01(rng) - 1.0));
}

inline BinaryState random_bits(std::uint64_t seed, std::size_t n) {
  Rng rng = make_rng(derive_seed(seed, {0xb175ULL}));
  BinaryState s(n);
  for (auto& b : s) b = static_cast<std::uint8_t>(rng() & 1u);
  return s;
}

}  // namespace sparsequbo::testing
